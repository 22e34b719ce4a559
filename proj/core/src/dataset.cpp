#include "robreg/dataset.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "robreg/rng.hpp"

namespace robreg {

void Dataset::validate() const {
  if (y.size() != X.rows())
    throw InvalidInput("dataset: y length does not match row count of X");
  if (n() < 2) throw InvalidInput("dataset: need at least 2 samples");
  if (d() < 1) throw InvalidInput("dataset: need at least 1 covariate");
  if (!y.allFinite() || !X.allFinite())
    throw InvalidInput("dataset: non-finite entry");
}

void GeneratorSpec::validate(Eigen::Index d) const {
  if (design == DesignKind::student_t && design_df <= 4)
    throw InvalidInput("generator: student_t design requires df > 4");
  if (noise == NoiseKind::student_t && noise_df < 1)
    throw InvalidInput("generator: student_t noise requires df >= 1");
  if (noise_sigma < 0.0) throw InvalidInput("generator: negative noise scale");
  if (sigma_sq <= 0.0) throw InvalidInput("generator: sigma_sq must be positive");
  if (sigma_c <= 0.0) throw InvalidInput("generator: sigma_c must be positive");
  if (design == DesignKind::gaussian_cov) {
    if (design_cov.rows() != d || design_cov.cols() != d)
      throw InvalidInput("generator: design_cov must be d x d");
  }
  if (mu.size() != 0 && mu.size() != d)
    throw InvalidInput("generator: mu must be empty or length d");
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::point_cluster: return "point_cluster";
    case AttackKind::leverage: return "leverage";
    case AttackKind::response_only: return "response_only";
    case AttackKind::mean_shift: return "mean_shift";
  }
  return "none";
}

AttackKind attack_from_name(const std::string& name) {
  if (name == "none") return AttackKind::none;
  if (name == "point_cluster") return AttackKind::point_cluster;
  if (name == "leverage") return AttackKind::leverage;
  if (name == "response_only") return AttackKind::response_only;
  if (name == "mean_shift") return AttackKind::mean_shift;
  throw InvalidInput("unknown attack: " + name);
}

void ContaminationSpec::validate() const {
  if (eps < 0.0 || eps >= 1.0 / 3.0)
    throw InvalidInput("contamination: eps must lie in [0, 1/3)");
}

std::vector<Eigen::Index> OracleInstance::clean_idx() const {
  std::vector<Eigen::Index> out;
  out.reserve(dataset.n() - static_cast<Eigen::Index>(outlier_idx.size()));
  std::set<Eigen::Index> bad(outlier_idx.begin(), outlier_idx.end());
  for (Eigen::Index i = 0; i < dataset.n(); ++i)
    if (!bad.count(i)) out.push_back(i);
  return out;
}

bool OracleInstance::is_outlier(Eigen::Index i) const {
  return std::binary_search(outlier_idx.begin(), outlier_idx.end(), i);
}

double OracleInstance::model_identity_residual() const {
  const double root_n = std::sqrt(static_cast<double>(dataset.n()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < dataset.n(); ++i) {
    const double predicted =
        dataset.X.row(i).dot(beta_star) + xi[i] + root_n * theta_resp[i];
    worst = std::max(worst, std::abs(dataset.y[i] - predicted));
  }
  return worst;
}

namespace {

double draw_design_entry(const GeneratorSpec& spec, Rng& rng) {
  switch (spec.design) {
    case DesignKind::gaussian_identity:
    case DesignKind::gaussian_cov:
      return rng.normal();
    case DesignKind::rademacher:
      return rng.rademacher();
    case DesignKind::uniform_scaled:
      return rng.uniform(-1.7320508075688772, 1.7320508075688772);
    case DesignKind::student_t: {
      // Scale to unit variance: Var(t_df) = df / (df - 2).
      const double s = std::sqrt((spec.design_df - 2.0) / spec.design_df);
      return s * rng.student_t(spec.design_df);
    }
  }
  return 0.0;
}

double draw_noise(const GeneratorSpec& spec, Rng& rng) {
  switch (spec.noise) {
    case NoiseKind::gaussian: return spec.noise_sigma * rng.normal();
    case NoiseKind::student_t: return spec.noise_sigma * rng.student_t(spec.noise_df);
    case NoiseKind::laplace: return rng.laplace(spec.noise_sigma);
  }
  return 0.0;
}

}  // namespace

OracleInstance generate(const GeneratorSpec& spec, Eigen::Index n, Eigen::Index d,
                        const Eigen::VectorXd& beta_star, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("generate: n must be >= 2");
  if (d < 1) throw InvalidInput("generate: d must be >= 1");
  if (beta_star.size() != d)
    throw InvalidInput("generate: beta_star must have length d");
  spec.validate(d);

  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = draw_design_entry(spec, rng);

  if (spec.design == DesignKind::gaussian_cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(spec.design_cov);
    if (llt.info() != Eigen::Success)
      throw InvalidInput("generate: design_cov is not positive definite");
    X = X * llt.matrixL().transpose();
  }
  if (spec.mu.size() == d) X.rowwise() += spec.mu.transpose();

  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = draw_noise(spec, rng);

  OracleInstance inst;
  inst.x_clean = X;
  inst.xi = xi;
  inst.beta_star = beta_star;
  inst.dataset.X = X;
  inst.dataset.y = X * beta_star + xi;
  inst.rho = Eigen::MatrixXd::Zero(n, d);
  inst.theta_resp = Eigen::VectorXd::Zero(n);
  inst.seed = seed;
  inst.spec = spec;
  return inst;
}

OracleInstance contaminate(const OracleInstance& inst, const ContaminationSpec& spec) {
  spec.validate();
  const Eigen::Index n = inst.dataset.n();
  const Eigen::Index d = inst.dataset.d();

  // Start from the clean data so recontamination replaces a prior attack.
  OracleInstance out = inst;
  out.dataset.X = inst.x_clean;
  out.dataset.y = inst.x_clean * inst.beta_star + inst.xi;
  out.rho = Eigen::MatrixXd::Zero(n, d);
  out.theta_resp = Eigen::VectorXd::Zero(n);
  out.outlier_idx.clear();

  const Eigen::Index o =
      static_cast<Eigen::Index>(std::ceil(spec.eps * static_cast<double>(n)));
  if (spec.attack == AttackKind::none || o == 0) return out;
  if (3 * o > n)
    throw InvalidInput("contaminate: ceil(eps*n) exceeds n/3");

  Rng rng(Rng::derive_stream(spec.seed, 0x61747461636bULL, static_cast<std::uint64_t>(n)));
  std::set<Eigen::Index> chosen;
  while (static_cast<Eigen::Index>(chosen.size()) < o)
    chosen.insert(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  out.outlier_idx.assign(chosen.begin(), chosen.end());

  for (Eigen::Index i : out.outlier_idx) {
    Eigen::VectorXd new_x = out.dataset.X.row(i).transpose();
    double new_y = out.dataset.y[i];
    switch (spec.attack) {
      case AttackKind::point_cluster: {
        if (spec.cluster_x.size() != d)
          throw InvalidInput("contaminate: cluster_x must have length d");
        new_x = spec.cluster_x;
        new_y = spec.cluster_y;
        break;
      }
      case AttackKind::leverage: {
        new_x = spec.leverage_scale * inst.x_clean.row(i).transpose();
        new_y = spec.response_flip ? -new_x.dot(inst.beta_star)
                                   : inst.x_clean.row(i).dot(inst.beta_star) + inst.xi[i];
        break;
      }
      case AttackKind::response_only: {
        new_y += spec.response_magnitude;
        break;
      }
      case AttackKind::mean_shift: {
        Eigen::VectorXd dir = spec.shift_direction;
        if (dir.size() == 0) dir = Eigen::VectorXd::Unit(d, 0);
        if (dir.size() != d)
          throw InvalidInput("contaminate: shift_direction must have length d");
        const double norm = dir.norm();
        if (norm == 0.0) throw InvalidInput("contaminate: zero shift direction");
        new_x += (spec.shift_magnitude / norm) * dir;
        break;  // response kept at the clean value
      }
      case AttackKind::none: break;
    }
    out.dataset.X.row(i) = new_x.transpose();
    out.dataset.y[i] = new_y;
    out.rho.row(i) = (new_x - inst.x_clean.row(i).transpose()).transpose();
    out.theta_resp[i] = (new_y - new_x.dot(inst.beta_star) - inst.xi[i]) /
                        std::sqrt(static_cast<double>(n));
  }
  return out;
}

namespace {

void fail_csv(const std::string& path, Eigen::Index row, Eigen::Index col,
              const std::string& what) {
  std::ostringstream msg;
  msg << path << ": " << what << " at row " << row << ", column " << col;
  throw InvalidInput(msg.str());
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_line(line);
  if (header.empty() || header[0] != "y")
    throw InvalidInput(path + ": header must start with 'y'");
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
  if (d < 1) throw InvalidInput(path + ": header must list at least one covariate");
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::string expected = "x" + std::to_string(j + 1);
    if (header[static_cast<std::size_t>(j + 1)] != expected)
      throw InvalidInput(path + ": malformed header, expected column '" + expected +
                         "', got '" + header[static_cast<std::size_t>(j + 1)] + "'");
  }

  std::vector<double> ys;
  std::vector<double> xs;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != d + 1)
      fail_csv(path, row, static_cast<Eigen::Index>(cells.size()), "ragged row");
    for (Eigen::Index j = 0; j <= d; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(j)];
      std::size_t pos = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &pos);
      } catch (const std::exception&) {
        fail_csv(path, row, j, "non-numeric cell '" + cell + "'");
      }
      if (pos != cell.size()) fail_csv(path, row, j, "non-numeric cell '" + cell + "'");
      if (j == 0)
        ys.push_back(value);
      else
        xs.push_back(value);
    }
  }
  if (row < 2) throw InvalidInput(path + ": need at least 2 data rows");

  Dataset ds;
  ds.y = Eigen::Map<Eigen::VectorXd>(ys.data(), row);
  ds.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::RowMajor>>(xs.data(), row, d);
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw InvalidInput(path + ": cannot open file for writing");
  out << "y";
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << ",x" << (j + 1);
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << ds.y[i];
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << "," << ds.X(i, j);
    out << "\n";
  }
  if (!out) throw InvalidInput(path + ": write failed");
}

}  // namespace robreg
