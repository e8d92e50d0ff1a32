"""
Test suite for acmcli
"""
