// Benchmark comparing the OpenMP kernels against their serial reference
// implementations. Run with OMP_NUM_THREADS to control the parallel side.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "radmap/gaussian.hpp"
#include "radmap/metrics.hpp"
#include "radmap/odometry.hpp"
#include "radmap/reference.hpp"
#include "radmap/render.hpp"
#include "radmap/rng.hpp"
#include "radmap/supervision.hpp"

using namespace radmap;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

void report(const std::string& name, double parallel_ms, double serial_ms) {
  std::printf("%-28s parallel %9.3f ms   serial %9.3f ms   speedup %5.2fx\n", name.c_str(),
              parallel_ms, serial_ms, serial_ms / parallel_ms);
}

RadarFrame random_frame(Rng& rng, int n) {
  RadarFrame frame;
  for (int i = 0; i < n; ++i) {
    frame.points.push_back({Vec3(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(-3, 3)),
                            rng.normal(), rng.normal(10, 3)});
  }
  return frame;
}

GaussianMap random_map(Rng& rng, int n) {
  GaussianMap map;
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    g.mu = Vec3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(6, 18));
    g.opacity_logit = rng.uniform(-1.0, 1.5);
    g.log_scale = Vec3::Constant(rng.uniform(-2.0, -0.7));
    g.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    g.color = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
    map.gaussians.push_back(g);
  }
  return map;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(99);

  {
    const RadarFrame frame = random_frame(rng, 4000);
    report("local_density n=4000",
           time_ms([&] { local_density(frame, 2.0); }, 5),
           time_ms([&] { ref::local_density_quadratic(frame, 2.0); }, 2));
  }
  {
    const RadarFrame src = random_frame(rng, 3000);
    const RadarFrame tgt = random_frame(rng, 3000);
    report("nearest_corr n=3000",
           time_ms([&] { nearest_correspondences(src, tgt); }, 5),
           time_ms([&] { ref::nearest_correspondences_bruteforce(src, tgt); }, 2));
  }
  {
    Rng prng(7);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 4000; ++i) {
      a.emplace_back(prng.uniform(-30, 30), prng.uniform(-30, 30), prng.uniform(-3, 3));
      b.emplace_back(prng.uniform(-30, 30), prng.uniform(-30, 30), prng.uniform(-3, 3));
    }
    report("chamfer n=4000",
           time_ms([&] { chamfer_l1(a, b); }, 5),
           time_ms([&] { ref::chamfer_l1_bruteforce(a, b); }, 2));
  }
  {
    const GaussianMap map = random_map(rng, 1500);
    Camera cam;
    cam.fx = cam.fy = 60;
    cam.cx = cam.cy = 32;
    cam.width = cam.height = 64;
    report("render 1500 gaussians 64px",
           time_ms([&] { render(map, cam); }, 5),
           time_ms([&] { ref::render_bruteforce(map, cam); }, 2));
  }
  return 0;
}
