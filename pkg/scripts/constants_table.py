"""Print measured margin, smoothness, rate exponent and C_phi for the catalog."""
import argparse
import math

from fylab.fenchel import _alpha_details, c_phi, make_loss, smoothness_estimate
from fylab.verify import CONSTANTS_LOSSES, published_constants


def fmt(x):
    if x is None:
        return "none"
    return "inf" if math.isinf(x) else f"{x:.6g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps-bar", type=float, default=1e-4)
    args = ap.parse_args()
    print(f"{'loss':<14}{'m':>10}{'m_pub':>10}{'beta':>12}{'beta_pub':>12}{'alpha':>10}{'alpha_pub':>11}{'C_phi':>10}")
    for spec in CONSTANTS_LOSSES:
        l = make_loss(*spec)
        m_pub, b_pub, a_pub, _ = published_constants(l)
        alpha, _, alpha_lim = _alpha_details(l, args.eps_bar)
        print(f"{l.name:<14}{fmt(l.margin):>10}{fmt(m_pub):>10}{fmt(smoothness_estimate(l)):>12}"
              f"{fmt(b_pub):>12}{fmt(alpha_lim):>10}{fmt(a_pub):>11}{fmt(c_phi(l, args.eps_bar, alpha)):>10}")


if __name__ == "__main__":
    main()
