"""
Unit tests for the remote detector wire protocol and client.
"""

