"""CLI runs frozen as golden files: (name, argv, expected exit code)."""

CASES = [
    ("moments_fp_semicircle", ["moments", "--input", "specs/fp_semicircle.json"], 0),
    ("cumulants_fp_semicircle", ["cumulants", "--input", "specs/fp_semicircle.json"], 0),
    ("cumulants_free_poisson", ["cumulants", "--input", "specs/free_poisson.json"], 0),
    ("sheffer_chebyshev", ["sheffer", "--input", "specs/semicircle_1.json", "--degree", "3"], 0),
    ("sheffer_fp_semicircle", ["sheffer", "--input", "specs/fp_semicircle.json", "--degree", "2"], 0),
    ("sheffer_degree0", ["sheffer", "--input", "specs/semicircle_1.json", "--degree", "0"], 0),
    ("check_meixner_pair", ["check", "meixner", "--input", "specs/meixner_pair.json"], 0),
    ("check_tracial_exp_oplus", ["check", "tracial", "--input", "specs/exp_oplus.json"], 3),
    ("check_infdiv_not_infdiv", ["check", "infdiv", "--input", "specs/not_infdiv.json"], 3),
    ("moments_fp_semicircle_csv", ["moments", "--input", "specs/fp_semicircle.json", "--format", "csv"], 0),
]
