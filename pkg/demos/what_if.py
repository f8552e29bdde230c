"""Design questions: classical headroom, target-path loss and wavelength band."""
from dataclasses import replace

from coexsim.channel import ClassicalChannelPlan, headroom_ratio
from coexsim.engine import band_comparison, paper_scenario, target_loss_tolerance, with_parameter


def main() -> None:
    for p_min in (0.5, 0.085):
        m = headroom_ratio(ClassicalChannelPlan(74.0, p_min))
        print(f"74 mW over a {p_min} mW receiver: room for {m:.0f} channels")

    s = paper_scenario()
    s = replace(s, run=replace(s.run, bootstrap_resamples=2))
    for dark in (0.0, 100.0, 1000.0):
        tol = target_loss_tolerance(with_parameter(s, "dark_rate_d3", dark), 0.05)
        print(f"target detector {dark:6.0f} cps dark: F_avg drops by 0.05 after {tol:.1f} dB of target loss")

    for power in (0.0, 1.0, 74.0):
        o, c = band_comparison(with_parameter(s, "launch_power", power), noise_ratio=100.0, loss_delta_db_per_km=0.15)
        print(
            f"P = {power:4.0f} mW  O-band F_avg {o.f_avg:.4f} ({o.max_fourfold:.3f} cps)"
            f"  C-band F_avg {c.f_avg:.4f} ({c.max_fourfold:.3f} cps)"
        )


if __name__ == "__main__":
    main()
