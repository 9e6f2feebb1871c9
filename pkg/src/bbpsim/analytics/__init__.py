"""Closed-form latency models and trace reduction."""
