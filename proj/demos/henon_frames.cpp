// Hyperbolic frames along a Henon orbit and how fast they settle.

#include <cstdio>

#include <hypcoord/bounds.hpp>
#include <hypcoord/hypframe.hpp>
#include <hypcoord/planar_maps.hpp>

int main() {
  using namespace hypcoord;
  MapSpec henon = henon_map(1.4, 0.3);
  OrbitSegment o = compute_orbit(henon, {0.0, 0.0}, 20);
  ConstantsLedger l = fit_constants(o, Flavor::SingularII);
  std::printf("fitted ledger (%s): lambda=%.4f Gamma=%.4f c=%.4f\n", l.note.c_str(), l.lambda,
              l.Gamma, l.c);

  std::printf("%3s %12s %12s %12s %14s\n", "k", "e_x", "e_y", "coecc", "|e(k)-e(20)|");
  for (int k = 1; k <= 20; ++k) {
    HyperbolicFrame h = hyperbolic_coordinates(o, k);
    std::printf("%3d %12.8f %12.8f %12.4e %14.4e\n", k, h.e.x, h.e.y, h.coecc,
                k < 20 ? frame_distance(o, k, 20) : 0.0);
  }

  BoundReport r = verify_explicit_convergence(o, l, auxiliary_constants(l));
  std::printf("explicit bounds: %zu checks, %zu violations\n", r.rows.size(), r.violations());
  return r.verdict() ? 0 : 1;
}
