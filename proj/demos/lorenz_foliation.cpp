// Unstable-field curves of the Lorenz-like map, written as CSV and SVG.
// Curves stop before the singular line x = 0.

#include <cstdio>
#include <fstream>

#include <hypcoord/foliation.hpp>
#include <hypcoord/planar_maps.hpp>

int main(int argc, char** argv) {
  using namespace hypcoord;
  std::string stem = argc > 1 ? argv[1] : "lorenz_foliation";
  Rect view{-1.0, 1.0, -1.0, 1.0};
  FoliationGrid g =
      foliation_grid(lorenz2d_map(), view, 3, 0.1, {FieldTag::Stable, FieldTag::Unstable}, 1.0, 5e-3);
  std::ofstream(stem + ".csv") << curves_csv(g.curves);
  std::ofstream(stem + ".svg") << curves_svg(g.curves, view);
  for (const auto& c : g.curves)
    std::printf("%s-curve through (%+.2f, %+.2f): %zu vertices, ends %s / %s\n", to_string(c.field),
                c.points[c.seed_index].x, c.points[c.seed_index].y, c.points.size(),
                to_string(c.start_reason), to_string(c.reason));
  for (const auto& f : g.failures)
    std::printf("seed (%+.2f, %+.2f) skipped: %s\n", f.seed.x, f.seed.y, f.reason.c_str());
  return 0;
}
