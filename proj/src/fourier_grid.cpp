#include "decompound/fourier_grid.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "decompound/errors.hpp"

namespace decomp {

namespace {

// FFTW plan creation is not thread-safe; execution of a fresh plan on its
// own buffers is. Plans use FFTW_ESTIMATE, which is deterministic and cheap
// enough to build per call at these sizes.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> run_dft(const std::vector<std::complex<double>>& in,
                                          int sign) {
  const int m = static_cast<int>(in.size());
  fftw_complex* buf_in = fftw_alloc_complex(static_cast<std::size_t>(m));
  fftw_complex* buf_out = fftw_alloc_complex(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    buf_in[i][0] = in[static_cast<std::size_t>(i)].real();
    buf_in[i][1] = in[static_cast<std::size_t>(i)].imag();
  }
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(m, buf_in, buf_out, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    out[static_cast<std::size_t>(i)] = {buf_out[i][0], buf_out[i][1]};
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf_in);
  fftw_free(buf_out);
  return out;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

} // namespace

int FourierGrid::band_index(double xi_max) const {
  int j = static_cast<int>(std::floor(xi_max / dxi + 1e-9));
  return std::min(j, m / 2 - 1);
}

FourierGrid make_fourier_grid(double x_half_width, int x_points,
                              int oversampling, double xi_max_required,
                              int default_points) {
  if (!(x_half_width > 0.0)) throw ConfigError("x_half_width must be > 0");
  if (oversampling < 1) throw ConfigError("oversampling must be >= 1");

  int points = x_points > 0 ? x_points : default_points;
  if (!is_power_of_two(points))
    throw ConfigError("x_points must be a power of 2");

  // dxi depends only on x_half_width and oversampling, so growing the point
  // count extends the stored band reach (m/2 - 1) dxi without moving the
  // frequency samples. Grow until the band-edge index fits centered storage.
  const double dxi = M_PI / (x_half_width * oversampling);
  const int k_required =
      static_cast<int>(std::ceil(xi_max_required / dxi - 1e-9));
  while (points * oversampling / 2 - 1 < k_required) points *= 2;

  FourierGrid grid;
  grid.x_half_width = x_half_width;
  grid.x_points = points;
  grid.oversampling = oversampling;
  grid.m = points * oversampling;
  grid.dx = 2.0 * x_half_width / points;
  grid.dxi = 2.0 * M_PI / (grid.m * grid.dx);
  return grid;
}

// With xi_j = (k - m/2) dxi and x_i = (l - m/2) dx (storage indices k, l),
// e^{-i xi_j x_i} = e^{-2 pi i k l / m} (-1)^k (-1)^l (-1)^{m/2}, so the
// continuous-kernel sums reduce to a plain DFT with (-1)^k pre- and
// post-twiddles.
std::vector<std::complex<double>>
inverse_fourier(const FourierGrid& grid, const std::vector<std::complex<double>>& a) {
  const int m = grid.m;
  if (static_cast<int>(a.size()) != m)
    throw ConfigError("inverse_fourier input size must equal grid.m");

  std::vector<std::complex<double>> work(a);
  for (int k = 1; k < m; k += 2) work[static_cast<std::size_t>(k)] = -work[static_cast<std::size_t>(k)];
  auto out = run_dft(work, FFTW_FORWARD);

  const double scale = grid.dxi / (2.0 * M_PI);
  const int half_parity = (m / 2) % 2;
  for (int l = 0; l < m; ++l) {
    double s = ((l + half_parity) % 2 == 0) ? scale : -scale;
    out[static_cast<std::size_t>(l)] *= s;
  }
  return out;
}

std::vector<std::complex<double>>
forward_fourier(const FourierGrid& grid, const std::vector<std::complex<double>>& f) {
  const int m = grid.m;
  if (static_cast<int>(f.size()) != m)
    throw ConfigError("forward_fourier input size must equal grid.m");

  std::vector<std::complex<double>> work(f);
  for (int l = 1; l < m; l += 2) work[static_cast<std::size_t>(l)] = -work[static_cast<std::size_t>(l)];
  auto out = run_dft(work, FFTW_BACKWARD);

  const int half_parity = (m / 2) % 2;
  for (int k = 0; k < m; ++k) {
    double s = ((k + half_parity) % 2 == 0) ? grid.dx : -grid.dx;
    out[static_cast<std::size_t>(k)] *= s;
  }
  return out;
}

} // namespace decomp
