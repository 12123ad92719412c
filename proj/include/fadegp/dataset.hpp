#pragma once

#include <string>
#include <vector>

#include "fadegp/types.hpp"

namespace fadegp {

// Input column order used throughout the library.
enum InputColumn : int { col_h = 0, col_s = 1, col_i = 2, col_sx = 3, col_sy = 4 };
inline constexpr int n_inputs = 5;
inline const char* const input_names[n_inputs] = {"H", "S", "I", "Sx", "Sy"};

// Length scale assignment: H, S, I get their own scale; Sx and Sy share one.
inline constexpr int n_length_scales = 4;
inline constexpr int rho_index[n_inputs] = {0, 1, 2, 3, 3};

struct Dataset {
  Matrix y;      // T x N response curves; y(0, i) == 0 for every i
  Matrix x_raw;  // N x 5 inputs in original units, columns ordered H,S,I,Sx,Sy
  Vector times;  // length T, strictly increasing
  std::vector<std::string> ids;  // length N

  Index n_times() const { return y.rows(); }
  Index n_locations() const { return y.cols(); }

  // Throws ValidationError on any schema violation (shapes, anchor row,
  // non-finite values, time ordering, duplicate ids).
  void validate() const;

  // Copy with location i removed (leave-one-location-out support).
  Dataset without_location(Index i) const;
};

struct StandardizedInputs {
  Matrix x;        // N x 5, unitless
  Vector offsets;  // length 5; zero unless centering was requested
  Vector scales;   // length 5 divisors; scales[col_sx] == scales[col_sy]
  double spatial_scale = 0.0;  // the shared Sx/Sy divisor
};

// File schema: header id,Sx,Sy,H,S,I,y1,...,yT in exactly that order.
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& data);

// Divides H,S,I by their own sample sd (n-1 denominator) and Sx,Sy by one
// pooled sd computed from both columns' deviations (2N-1 denominator), so a
// kilometre costs the same in either map direction. Zero variance in any
// required column is a validation error.
StandardizedInputs standardize_inputs(const Matrix& x_raw, bool center = false);

// Standardizes new rows with a previously fitted offset/scale pair.
Matrix apply_standardization(const Matrix& x_raw, const StandardizedInputs& ref);

}  // namespace fadegp
