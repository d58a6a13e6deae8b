# Configuration settings for the mechanism auditing toolkit

MECHANISM_CONFIG = {
    'default_mode': 'claimed-adept',
    'clip_constant': 1.0,
    'epsilon': 1.0,
}

SENSITIVITY_CONFIG = {
    'oracle_max_dim': 16,  # brute-force oracle refuses larger n
    'oracle_min_trials': 10_000,
    'oracle_chunk_size': 8192,  # random sphere pairs drawn per chunk
    'ascent_steps': 64,
    'distance_tolerance': 1e-9,
    'factor_dims': [32, 64, 128, 256, 512, 1024],
    'block_rows': 256,
    'workers': 1,
}

AUDIT_CONFIG = {
    'probe_tolerance': 1e-6,
    'far_field_multiplier': 1e3,
}

# Pair scanning and sampling defaults for the violation sweep
SIMULATION_CONFIG = {
    'dims': [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
    'num_vectors': 10_000,
    'clip_constant': 1.0,
    'sigma_convention': 'variance',  # variance = 0.1 * C, or stddev = 0.1 * C
    'block_rows': 256,
    'clip_chunk': 1024,  # rows clipped per step
    'workers': 1,
}

LOGGING_CONFIG = {
    'level': 'WARNING',
}

CSV_HEADER = [
    'dim', 'sampler', 'num_vectors', 'pairs_checked', 'violations',
    'violation_fraction', 'clip_constant', 'seed',
]
