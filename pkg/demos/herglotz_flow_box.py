"""Boundary measures, their harmonic extensions, and flow-box invariance.

Recovers a boundary measure on the circle from samples of its Poisson
extension, then checks that the measure k(z, theta) dA(z) dphi(theta) on a
flow box does not change under a small element of the affine group, while
a perturbed density does.
"""

from hyperlam import herglotz
from hyperlam.herglotz import BoundaryMeasure, FlowBoxMeasure


def main():
    z = herglotz.sample_circles((0.5, 0.8), 64)
    for name, phi in [("two atoms", BoundaryMeasure.atoms([1.0, 4.0], [0.3, 0.7])),
                      ("uniform", BoundaryMeasure.uniform(256, mass=1.0))]:
        rec = herglotz.recover_boundary_measure(z, herglotz.harmonic_extension(phi, z), 256)
        print(f"{name:10s} W1 = {herglotz.circle_w1(rec.measure, phi):.4f}, "
              f"recovered mass {rec.measure.total_mass:.4f}, condition {rec.condition:.1e}")

    fs = herglotz.flow_box_battery()
    exact = FlowBoxMeasure(0j, 0.5, BoundaryMeasure.uniform(256))
    control = FlowBoxMeasure(0j, 0.5, BoundaryMeasure.uniform(256), perturbation=0.2)
    print("\naffine element a=1.05, b=0.02")
    for n in (64, 128, 256):
        inv = max(herglotz.affine_conditional_check(exact, 1.05, 0.02, fs, n=n))
        ctl = max(herglotz.affine_conditional_check(control, 1.05, 0.02, fs, n=n))
        print(f"  quadrature {n:3d}^2: invariant gap {inv:.2e}, perturbed gap {ctl:.2e}")

    z0 = 0.1 + 0.05j
    atom = FlowBoxMeasure(0j, 0.5, BoundaryMeasure.atoms([2.0], [1.0]))
    mv = herglotz.mollified_point_values(atom, z0, [0.2, 0.1, 0.05])
    print(f"\nmollified values at {z0}: {mv.values}, Poisson kernel {herglotz.poisson_kernel(z0, 2.0):.12f}")


if __name__ == "__main__":
    main()
