#include "fadegp/dataset.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "fadegp/errors.hpp"
#include "fadegp/textio.hpp"

namespace fadegp {

void Dataset::validate() const {
  const Index t_count = y.rows(), n = y.cols();
  if (t_count < 3) throw ValidationError("dataset: need at least 3 time points");
  if (n < 1) throw ValidationError("dataset: need at least 1 location");
  if (x_raw.rows() != n || x_raw.cols() != n_inputs) {
    throw ValidationError("dataset: inputs must be N x 5 with N matching the response columns");
  }
  if (times.size() != t_count) throw ValidationError("dataset: times length must match response rows");
  if (static_cast<Index>(ids.size()) != n) throw ValidationError("dataset: ids length must match locations");
  for (Index t = 1; t < t_count; ++t) {
    if (!(times[t] > times[t - 1])) throw ValidationError("dataset: times must be strictly increasing");
  }
  for (Index t = 0; t < t_count; ++t) {
    if (!std::isfinite(times[t])) throw ValidationError("dataset: non-finite time value");
  }
  for (Index i = 0; i < n; ++i) {
    if (y(0, i) != 0.0) {
      throw ValidationError("dataset: first response must be exactly 0 at every location (row '" +
                            ids[i] + "')");
    }
    for (Index t = 0; t < t_count; ++t) {
      if (!std::isfinite(y(t, i))) {
        throw ValidationError("dataset: non-finite response at location '" + ids[i] + "'");
      }
    }
    for (int j = 0; j < n_inputs; ++j) {
      if (!std::isfinite(x_raw(i, j))) {
        throw ValidationError("dataset: non-finite input at location '" + ids[i] + "'");
      }
    }
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ValidationError("dataset: duplicate id '" + id + "'");
  }
}

Dataset Dataset::without_location(Index i) const {
  if (i < 0 || i >= n_locations()) throw ValidationError("without_location: index out of range");
  Dataset out;
  const Index n = n_locations();
  out.y.resize(n_times(), n - 1);
  out.x_raw.resize(n - 1, n_inputs);
  out.times = times;
  out.ids.reserve(n - 1);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    out.y.col(k) = y.col(j);
    out.x_raw.row(k) = x_raw.row(j);
    out.ids.push_back(ids[j]);
    ++k;
  }
  return out;
}

Dataset load_dataset(const std::string& path) {
  CsvTable table = read_csv(path);
  const char* fixed[6] = {"id", "Sx", "Sy", "H", "S", "I"};
  if (table.header.size() < 7) {
    throw ValidationError(path + ": expected header id,Sx,Sy,H,S,I,y1,...,yT");
  }
  for (int j = 0; j < 6; ++j) {
    if (table.header[j] != fixed[j]) {
      throw ValidationError(path + ": column " + std::to_string(j + 1) + " must be '" + fixed[j] +
                            "', got '" + table.header[j] + "'");
    }
  }
  const Index t_count = static_cast<Index>(table.header.size()) - 6;
  for (Index t = 0; t < t_count; ++t) {
    const std::string want = "y" + std::to_string(t + 1);
    if (table.header[6 + t] != want) {
      throw ValidationError(path + ": response column " + std::to_string(t + 1) + " must be '" +
                            want + "', got '" + table.header[6 + t] + "'");
    }
  }
  const Index n = static_cast<Index>(table.rows.size());
  if (n < 1) throw ValidationError(path + ": no data rows");

  Dataset data;
  data.y.resize(t_count, n);
  data.x_raw.resize(n, n_inputs);
  data.times.resize(t_count);
  for (Index t = 0; t < t_count; ++t) data.times[t] = static_cast<double>(t + 1);
  data.ids.reserve(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = path + " row " + std::to_string(i + 2);
    data.ids.push_back(row[0]);
    data.x_raw(i, col_sx) = parse_double(row[1], ctx + " Sx");
    data.x_raw(i, col_sy) = parse_double(row[2], ctx + " Sy");
    data.x_raw(i, col_h) = parse_double(row[3], ctx + " H");
    data.x_raw(i, col_s) = parse_double(row[4], ctx + " S");
    data.x_raw(i, col_i) = parse_double(row[5], ctx + " I");
    for (Index t = 0; t < t_count; ++t) {
      data.y(t, i) = parse_double(row[6 + t], ctx + " y" + std::to_string(t + 1));
    }
  }
  data.validate();
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  data.validate();
  CsvTable table;
  table.header = {"id", "Sx", "Sy", "H", "S", "I"};
  for (Index t = 0; t < data.n_times(); ++t) table.header.push_back("y" + std::to_string(t + 1));
  for (Index i = 0; i < data.n_locations(); ++i) {
    std::vector<std::string> row;
    row.push_back(data.ids[i]);
    row.push_back(fmt_double(data.x_raw(i, col_sx)));
    row.push_back(fmt_double(data.x_raw(i, col_sy)));
    row.push_back(fmt_double(data.x_raw(i, col_h)));
    row.push_back(fmt_double(data.x_raw(i, col_s)));
    row.push_back(fmt_double(data.x_raw(i, col_i)));
    for (Index t = 0; t < data.n_times(); ++t) row.push_back(fmt_double(data.y(t, i)));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

StandardizedInputs standardize_inputs(const Matrix& x_raw, bool center) {
  const Index n = x_raw.rows();
  if (x_raw.cols() != n_inputs) throw ValidationError("standardize_inputs: expected 5 columns");
  if (n < 2) throw ValidationError("standardize_inputs: need at least 2 rows");

  StandardizedInputs out;
  out.offsets = Vector::Zero(n_inputs);
  out.scales = Vector::Ones(n_inputs);

  Vector means = x_raw.colwise().mean();
  for (int j : {col_h, col_s, col_i}) {
    const double ss = (x_raw.col(j).array() - means[j]).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw ValidationError(std::string("standardize_inputs: column ") + input_names[j] +
                            " has zero variance");
    }
    out.scales[j] = sd;
  }
  // Pooled isotropic spatial scale: both coordinate columns centered by their
  // own means, one common divisor from the combined deviations.
  const double ss_x = (x_raw.col(col_sx).array() - means[col_sx]).square().sum();
  const double ss_y = (x_raw.col(col_sy).array() - means[col_sy]).square().sum();
  const double pooled = std::sqrt((ss_x + ss_y) / static_cast<double>(2 * n - 1));
  if (!(pooled > 0.0)) {
    throw ValidationError("standardize_inputs: spatial coordinates have zero variance");
  }
  out.scales[col_sx] = pooled;
  out.scales[col_sy] = pooled;
  out.spatial_scale = pooled;

  if (center) out.offsets = means;
  out.x = apply_standardization(x_raw, out);
  return out;
}

Matrix apply_standardization(const Matrix& x_raw, const StandardizedInputs& ref) {
  if (x_raw.cols() != n_inputs) throw ValidationError("apply_standardization: expected 5 columns");
  Matrix x = x_raw;
  for (int j = 0; j < n_inputs; ++j) {
    x.col(j) = (x_raw.col(j).array() - ref.offsets[j]) / ref.scales[j];
  }
  return x;
}

}  // namespace fadegp
