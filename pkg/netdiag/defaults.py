"""
Project-wide default settings

These are in their own file so they can be imported by setup.py before we have
any of our dependencies installed.
"""

NETDIAG_ETC_PATH = "/etc/netdiag/"
DEFAULT_CONFIG_FILE = NETDIAG_ETC_PATH + "netdiag.conf"
PRINT_WRAP_WIDTH = 80

SCHEMA_VERSION = "1"

DEFAULT_TIE_EPSILON = 1e-6
DEFAULT_ENUMERATION_CAP = 20
DEFAULT_URL_TIMEOUT = 10
DEFAULT_BENCH_REPETITIONS = 20
DEFAULT_TOP_K = 3

# Spontaneous failure probability per vertex kind when no prior is configured
DEFAULT_LEAKS = {
    "cpu": 0.01,
    "network-card": 0.005,
    "vnf-process": 0.01,
    "vnf-config": 0.01,
    "vnf-active": 0.001,
    "link-state": 0.01,
}

# Utilization range for nodes not targeted by a CPU-load fault
BACKGROUND_CPU_LOAD_RANGE = (0.05, 0.95)

CONFIG_DEFAULTS = {
    "profile": "degree-adaptive",
    "priors_file": None,
    "tie_epsilon": DEFAULT_TIE_EPSILON,
    "top_k": DEFAULT_TOP_K,
    "enumeration_cap": DEFAULT_ENUMERATION_CAP,
    "elimination_heuristic": "min-fill",
    "url_timeout": DEFAULT_URL_TIMEOUT,
    "log_level": "WARNING",
    "log_file": None,
}

CONFIG_FIELD_ENVVAR_ALLOWLIST = [
    "netdiag_profile",
    "netdiag_priors_file",
    "netdiag_tie_epsilon",
    "netdiag_top_k",
    "netdiag_url_timeout",
    "netdiag_log_level",
    "netdiag_log_file",
]
