"""RIC KPI monitoring toolkit: subscription merging, traffic simulation,
power modeling, scenario comparison, and a live wire-protocol mode."""

__version__ = "0.1.0"
