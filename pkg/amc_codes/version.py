"""Placeholder PEP 440 compliant version for tests, to be overwritten by the release workflow"""
VERSION = '0.1.dev0'
