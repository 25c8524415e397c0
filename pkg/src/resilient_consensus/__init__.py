# ABOUTME: Package root for the resilient-consensus simulator.
# ABOUTME: DP-MSR resilient consensus for sampled-data double-integrator networks.

__version__ = "0.1.0"
