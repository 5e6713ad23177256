"""The instance set shared by the acceptance and convergence tests."""

from bfrb.problems import GasMarketSpec, make_gas_market, make_skew_box_vi, make_strongly_monotone_instance

GAS_ALPHA = 0.5
GAS_BETA = 10.0
GAS_COST = 1.0
GAS_CAPACITY = 20.0


def gas_spec(firms, periods):
    return GasMarketSpec(firms=firms, periods=periods, alpha=GAS_ALPHA, beta=GAS_BETA,
                         cost=GAS_COST, capacity=GAS_CAPACITY, budget_coupling=True)


BUILDERS = {
    "skew-box-2": lambda: make_skew_box_vi(2),
    "skew-box-10": lambda: make_skew_box_vi(10),
    "strongly-monotone-interior": lambda: make_strongly_monotone_instance(4, 1.0, "interior"),
    "strongly-monotone-boundary": lambda: make_strongly_monotone_instance(4, 1.0, "boundary"),
    "strongly-monotone-resolvent": lambda: make_strongly_monotone_instance(4, 1.0, "resolvent"),
}
for _m in (1, 2, 4):
    for _k in (1, 4):
        BUILDERS[f"gas-{_m}x{_k}"] = (lambda m=_m, k=_k: make_gas_market(gas_spec(m, k), reference=False))

STRONGLY_MONOTONE = ["strongly-monotone-interior", "strongly-monotone-boundary", "strongly-monotone-resolvent"]


def build(name):
    return BUILDERS[name]()
