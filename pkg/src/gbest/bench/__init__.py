"""Benchmark runners, regression analysis and plotting."""
