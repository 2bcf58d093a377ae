#include "crystclr/probe.hpp"

#include <Eigen/Cholesky>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crystclr/errors.hpp"

namespace crystclr {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw NumericalError("cannot format value");
  return std::string(buf, ptr);
}

Eigen::Index EmbeddingTable::row_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<Eigen::Index>(i);
  }
  throw DataError("no embedding for structure id '" + id + "'");
}

void write_embeddings_csv(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << "id";
  for (Eigen::Index k = 0; k < table.h.cols(); ++k) out << ",h_" << k;
  if (table.z) {
    for (Eigen::Index k = 0; k < table.z->cols(); ++k) out << ",z_" << k;
  }
  out << "\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (table.ids[i].find_first_of(",\"\n") != std::string::npos) {
      throw DataError("structure id '" + table.ids[i] + "' cannot be written to CSV");
    }
    out << table.ids[i];
    for (Eigen::Index k = 0; k < table.h.cols(); ++k) out << ',' << format_double(table.h(row, k));
    if (table.z) {
      for (Eigen::Index k = 0; k < table.z->cols(); ++k) out << ',' << format_double((*table.z)(row, k));
    }
    out << "\n";
  }
  if (!out) throw DataError(path + ": write failed");
}

EmbeddingTable read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open embeddings");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty embeddings file");
  std::vector<std::string> header;
  {
    std::istringstream cols(line);
    std::string c;
    while (std::getline(cols, c, ',')) header.push_back(c);
  }
  if (header.empty() || header[0] != "id") throw DataError(path + ": header must start with 'id'");
  int h_dim = 0;
  int z_dim = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string expect_h = "h_" + std::to_string(h_dim);
    const std::string expect_z = "z_" + std::to_string(z_dim);
    if (z_dim == 0 && header[k] == expect_h) {
      ++h_dim;
    } else if (header[k] == expect_z) {
      ++z_dim;
    } else {
      throw DataError(path + ": unexpected column '" + header[k] + "'");
    }
  }
  if (h_dim == 0) throw DataError(path + ": no h_* columns");

  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    table.ids.push_back(cell);
    std::vector<double> values;
    while (std::getline(cells, cell, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError(path + ":" + std::to_string(lineno) + ": malformed value '" + cell + "'");
      }
      values.push_back(v);
    }
    if (values.size() != static_cast<std::size_t>(h_dim + z_dim)) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(h_dim + z_dim) + " values");
    }
    rows.push_back(std::move(values));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  table.h.resize(n, h_dim);
  if (z_dim > 0) table.z = RowMatrix(n, z_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (int k = 0; k < h_dim; ++k) table.h(i, k) = r[static_cast<std::size_t>(k)];
    for (int k = 0; k < z_dim; ++k) (*table.z)(i, k) = r[static_cast<std::size_t>(h_dim + k)];
  }
  return table;
}

Eigen::VectorXd RidgeModel::predict(const Eigen::Ref<const RowMatrix>& x) const {
  return (x * coef).array() + intercept;
}

RidgeModel fit_ridge(const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double lambda) {
  if (x.rows() != y.size()) throw ShapeError("ridge: row count differs from target count");
  if (x.rows() < 1) throw ShapeError("ridge: no training rows");
  if (!(lambda >= 0.0)) throw DataError("ridge: lambda must be >= 0");
  // Centring removes the intercept from the penalised system.
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  RidgeModel model;
  model.coef = ldlt.solve(xc.transpose() * yc);
  if (!model.coef.allFinite()) throw NumericalError("ridge: singular system; increase lambda");
  model.intercept = y_mean - x_mean.dot(model.coef);
  return model;
}

namespace {

RowMatrix gather_rows(const Eigen::Ref<const RowMatrix>& x, const std::vector<int>& idx) {
  RowMatrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

Eigen::VectorXd gather(std::span<const double> v, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<std::size_t>(idx[i])];
  return out;
}

}  // namespace

ProbeResult linear_probe(const Eigen::Ref<const RowMatrix>& x, std::span<const double> targets,
                         const Split& split, double lambda, std::string property) {
  if (static_cast<std::size_t>(x.rows()) != targets.size()) {
    throw ShapeError("probe: " + std::to_string(x.rows()) + " embeddings for " +
                     std::to_string(targets.size()) + " targets");
  }
  if (split.train.empty() || split.test.empty()) throw DataError("probe: empty train or test split");
  const Eigen::VectorXd y_train = gather(targets, split.train);
  ProbeResult result;
  result.property = std::move(property);
  result.lambda = lambda;
  result.n_train = split.train.size();
  result.n_validation = split.validation.size();
  result.n_test = split.test.size();
  result.degenerate_targets = (y_train.array() == y_train[0]).all();
  if (result.degenerate_targets) {
    std::cerr << "warning: probe '" << result.property
              << "' has identical training targets; predictions are constant\n";
  }
  result.model = fit_ridge(gather_rows(x, split.train), y_train, lambda);
  const Eigen::VectorXd pred = result.model.predict(gather_rows(x, split.test));
  result.mae = (pred - gather(targets, split.test)).cwiseAbs().mean();
  return result;
}

std::string probe_result_csv(const ProbeResult& r) {
  std::ostringstream out;
  out << "property,mae,n_train,n_validation,n_test,lambda\n"
      << r.property << ',' << format_double(r.mae) << ',' << r.n_train << ',' << r.n_validation
      << ',' << r.n_test << ',' << format_double(r.lambda) << "\n";
  return out.str();
}

}  // namespace crystclr
