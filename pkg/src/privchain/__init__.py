"""Private provenance on a simulated permissioned ledger.

Farms prove that a grape lot was grown inside a registered region without
revealing where; the ledger records only the region name, pays the farm an
incentive through an off-chain bank, and hides which lots went into which
product from everyone but key holders.
"""

__version__ = "0.1.0"
