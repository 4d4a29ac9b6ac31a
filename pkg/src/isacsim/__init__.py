"""Hybrid-RIS ISAC downlink simulator.

Submodules: sdp_core (embedded SDP solver), channel (geometry and fading),
sysmodel (effective channels and power accounting), bf_design and ris_design
(the two alternating subproblems), optimizer (the alternation loop),
simharness (Monte-Carlo sweeps and CSV emission), cli (console entry point).
"""

__version__ = "0.1.0"
