"""amc_codes: abelian multi-cycle quantum CSS codes, circuits and decoders"""
from .version import VERSION
