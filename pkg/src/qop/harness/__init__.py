"""Experiment runners behind the ``qop`` command line."""
