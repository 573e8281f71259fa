#!/usr/bin/env python3
"""
Script principal do toolkit conda-tgl.
"""
import os
import sys

from dotenv import load_dotenv

# Carrega as variáveis de ambiente do arquivo .env
load_dotenv()

# Limite de threads dos kernels numéricos (1 = modo totalmente determinístico);
# precisa ser definido antes da primeira importação do numpy
_threads = os.getenv("CONDA_TGL_THREADS")
if _threads:
    for variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[variable] = _threads

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
