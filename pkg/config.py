import os

# -------- Output / log --------
LOG_DIR = os.getenv("FF_LOG_DIR", "logs")  # stringa vuota -> provenance disattivata
OUT_DIR = os.getenv("FF_OUT_DIR", "out")
TOOLKIT_VERSION = "freefermion-toolkit 1.0"

# -------- Tolleranze numeriche --------
ORTHO_TOL = float(os.getenv("FF_ORTHO_TOL", "1e-10"))          # qᵀq = I (norma operatore)
RECON_TOL = float(os.getenv("FF_RECON_TOL", "1e-9"))           # ricostruzione forma normale (max-entry)
LAMBDA_ZERO_TOL = float(os.getenv("FF_LAMBDA_ZERO_TOL", "1e-12"))
LAMBDA_INPUT_SLACK = float(os.getenv("FF_LAMBDA_INPUT_SLACK", "1e-6"))
LAMBDA_INTERNAL_SLACK = float(os.getenv("FF_LAMBDA_INTERNAL_SLACK", "1e-9"))
PURE_TOL = float(os.getenv("FF_PURE_TOL", "1e-6"))
HERMITIAN_TOL = float(os.getenv("FF_HERMITIAN_TOL", "1e-12"))
OCCUPATION_TOL = float(os.getenv("FF_OCCUPATION_TOL", "1e-9"))
IMAG_TOL = float(os.getenv("FF_IMAG_TOL", "1e-10"))
DENSE_TOL = float(os.getenv("FF_DENSE_TOL", "1e-10"))          # hermiticità / traccia di DenseState
DENSE_PSD_TOL = float(os.getenv("FF_DENSE_PSD_TOL", "1e-9"))
SUPPORT_TOL = float(os.getenv("FF_SUPPORT_TOL", "1e-12"))      # supporto nell'entropia relativa
FILE_ANTISYM_TOL = float(os.getenv("FF_FILE_ANTISYM_TOL", "1e-12"))
UNITARY_CHECK_TOL = float(os.getenv("FF_UNITARY_CHECK_TOL", "1e-8"))

# -------- Limiti desk-scale --------
DENSE_MAX_MODES = int(os.getenv("FF_DENSE_MAX_MODES", "10"))
MAJORANA_MAX_MODES = int(os.getenv("FF_MAJORANA_MAX_MODES", "12"))
LOCAL_TOMO_MAX_MODES = int(os.getenv("FF_LOCAL_TOMO_MAX_MODES", "6"))
MAX_SHOTS = int(float(os.getenv("FF_MAX_SHOTS", "1e10")))

# -------- Soglie algoritmi --------
STRICT_SLACK = float(os.getenv("FF_STRICT_SLACK", "0.9"))      # frazione dei bound aperti "<"
MIX2_TFACTOR = float(os.getenv("FF_MIX2_TFACTOR", "1.1"))

# -------- Esecuzione --------
WORKERS = int(os.getenv("FF_WORKERS", "1"))
DEFAULT_SEED = int(os.getenv("FF_SEED", "0"))
