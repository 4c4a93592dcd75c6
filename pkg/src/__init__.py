# rf-SQUID Escape Simulator Source Package
