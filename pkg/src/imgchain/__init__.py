"""imgchain: a proof-of-work ledger of images hashed by five perceptual
hash algorithms, a simulated multi-device retrieval network, and an
attack/benchmark harness."""

from .imagecore import (
    AttackKind,
    AttackSpec,
    FlipAxis,
    Image,
    apply_attack,
    crop,
    dct2,
    decode_image,
    encode_image,
    flip,
    gaussian_blur,
    idct2,
    resize,
    rotate,
    to_grayscale,
)
from .phash import (
    ALGORITHMS,
    AlgorithmId,
    BitHash,
    RadialDigest,
    average_hash,
    block_mean_hash,
    compare,
    hamming_distance,
    hash_image,
    marr_hildreth_hash,
    normalize,
    p_hash,
    parse_hash,
    radial_distance,
    radial_variance_hash,
    serialize_hash,
)
from .chain import (
    Block,
    Chain,
    append_image,
    byte_to_hex,
    calculate_hash,
    hex_to_byte,
    load_chain,
    make_genesis,
    mine_block,
    new_chain,
    save_chain,
    verify_chain,
)
from .network import (
    Device,
    DeviceResult,
    IntegrityError,
    QueryReport,
    build_network,
    device_scan,
    devices_from_chain,
    query,
    verify_replicas,
)
from .harness import (
    AttackSignature,
    SuiteResult,
    TestRecord,
    classify_attack,
    emit_csv,
    generate_attacks,
    parse_log,
    run_suite,
    write_log,
)
from .config import ClassifierThresholds, RunConfig, load_config

__version__ = "0.1.0"
