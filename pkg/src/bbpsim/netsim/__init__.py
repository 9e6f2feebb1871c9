"""Discrete-event network simulator: topology, links, mining, workload and
the engine that runs protocol nodes against them."""
