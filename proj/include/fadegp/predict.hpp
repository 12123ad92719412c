#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fadegp/model.hpp"
#include "fadegp/types.hpp"

namespace fadegp {

// Posterior draws reorganized for prediction: natural-scale states plus the
// per-draw monotonicity retention screen (min slope >= -1e-6 on the grid).
struct DrawSet {
  std::vector<ModelState> states;      // retained draws only
  std::vector<Index> chain_of;         // originating chain per retained draw
  Index total_draws = 0;               // before screening
  double retention_rate = 1.0;

  Index size() const { return static_cast<Index>(states.size()); }
};

inline constexpr double slope_screen_tol = -1e-6;

// Applies the retention screen to every posterior draw. Screening only
// matters for monotone models; otherwise everything is retained.
DrawSet screen_draws(const PosteriorModel& model, const std::vector<Matrix>& natural_chains);

struct PredictConfig {
  std::uint64_t seed = 1;
  int max_resamples = 50;   // per draw, before the draw is discarded
  double lower_prob = 0.025;
  double upper_prob = 0.975;
};

struct PredictiveSeries {
  Vector times;
  Matrix f_draws;      // S x T latent curves (screened)
  Matrix y_draws;      // S x T with noise, first column exactly zero
  Vector sigma_draws;  // S noise sds, aligned with the rows above
  Vector f_mean, y_mean, lower, upper;
  double resample_rate = 0.0;  // mean GP resamples per retained draw
  Index discarded = 0;         // draws dropped after max_resamples failures
};

// Complete-curve prediction at one unobserved location. Coefficients at the
// new site come from the GP conditional given each draw's surface; candidate
// curves violating the slope screen are resampled, then discarded.
PredictiveSeries predict_location(const PosteriorModel& model, const DrawSet& draws,
                                  const Vector& xstar_raw, const PredictConfig& cfg = {});

struct GridSpec {
  Matrix x_raw;  // M x 5 pixel inputs, original units
  Vector px, py; // pixel coordinates for image layout
};

// Grid CSV schema: header px,py,H,S,I.
GridSpec load_grid(const std::string& path);

struct FadingMap {
  GridSpec grid;
  Matrix mean_curves;          // M x T posterior mean fading curves
  Vector final_value;          // mean curve at the last time
  std::vector<char> perceptible;  // final value > threshold
  double threshold = 3.5;
};

// Posterior-mean map over a pixel grid. Means only: the conditional mean and
// the constraint elimination are both linear, so averaging coefficients first
// is exact. The OpenMP variant parallelizes over pixel blocks.
FadingMap fading_map(const PosteriorModel& model, const DrawSet& draws, const GridSpec& grid,
                     double threshold = 3.5);

namespace detail {
Matrix map_mean_coeffs_serial(const PosteriorModel& model, const DrawSet& draws, const Matrix& xstar_std);
Matrix map_mean_coeffs_omp(const PosteriorModel& model, const DrawSet& draws, const Matrix& xstar_std);
}  // namespace detail

// ASCII PGM (P2); gray = round(255 * clamp(v, 0, vmax) / vmax), vmax
// defaulting to the largest final value. Rows run from the highest py down,
// so north stays up.
void write_pgm(const std::string& path, const FadingMap& map, double vmax = 0.0);

void save_map_csv(const std::string& path, const FadingMap& map, const Vector& times);

}  // namespace fadegp
