#include "pwasync/pwa_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pwasync {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be positive");
  }
}

void require_non_negative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be non-negative");
  }
}

}  // namespace

void MassSpringParams::validate() const {
  require_positive(m1, "m1");
  require_positive(m2, "m2");
  require_non_negative(c, "c");
  require_non_negative(c1, "c1");
  require_positive(k, "k");
  require_positive(k2, "k2");
  if (!std::isfinite(d2)) throw std::invalid_argument("d2 must be finite");
}

bool PolyhedralCell::contains(const StateVector& x) const {
  return ((H.transpose() * x + h).array() < 0.0).all();
}

PwaSystem::PwaSystem(std::vector<Mode> modes, std::vector<PolyhedralCell> cells,
                     Eigen::VectorXd input_column, int boundary_mode)
    : modes_(std::move(modes)),
      cells_(std::move(cells)),
      input_column_(std::move(input_column)),
      boundary_mode_(boundary_mode) {
  if (modes_.empty()) throw std::invalid_argument("PwaSystem: no modes");
  if (modes_.size() != cells_.size()) {
    throw std::invalid_argument("PwaSystem: modes and cells differ in count");
  }
  const Eigen::Index n = input_column_.size();
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const Mode& mode = modes_[m];
    if (mode.index != static_cast<int>(m) + 1) {
      throw std::invalid_argument("PwaSystem: mode indices must be 1..N in order");
    }
    if (mode.A.rows() != n || mode.A.cols() != n || mode.b.size() != n) {
      throw std::invalid_argument("PwaSystem: mode dimensions disagree with B");
    }
    const PolyhedralCell& cell = cells_[m];
    if (cell.H.rows() != n || cell.H.cols() != cell.h.size()) {
      throw std::invalid_argument("PwaSystem: cell H/h dimensions inconsistent");
    }
  }
  if (boundary_mode_ < 1 || boundary_mode_ > static_cast<int>(modes_.size())) {
    throw std::invalid_argument("PwaSystem: boundary mode out of range");
  }
}

const Mode& PwaSystem::mode(int index) const {
  if (index < 1 || index > mode_count()) {
    throw std::out_of_range("PwaSystem: mode index " + std::to_string(index));
  }
  return modes_[static_cast<std::size_t>(index - 1)];
}

int PwaSystem::mode_of(const StateVector& x) const {
  for (std::size_t m = 0; m < cells_.size(); ++m) {
    if (cells_[m].contains(x)) return static_cast<int>(m) + 1;
  }
  return boundary_mode_;
}

StateVector PwaSystem::mode_field(int index, const StateVector& x, double u) const {
  const Mode& m = mode(index);
  return m.A * x + input_column_ * u + m.b;
}

StateVector PwaSystem::vector_field(const StateVector& x, double u) const {
  return mode_field(mode_of(x), x, u);
}

PwaSystem build_coupled_system(const MassSpringParams& p, InputConvention input) {
  p.validate();

  Eigen::Matrix4d free;
  // clang-format off
  free <<         0.0,                 1.0,        0.0,        0.0,
          -p.k / p.m1, -(p.c + p.c1) / p.m1, p.k / p.m1, p.c / p.m1,
                  0.0,                 0.0,        0.0,        1.0,
           p.k / p.m2,          p.c / p.m2, -p.k / p.m2, -p.c / p.m2;
  // clang-format on
  Eigen::Matrix4d contact = free;
  contact(3, 2) = -(p.k + p.k2) / p.m2;

  Mode mode1{1, free, Eigen::Vector4d::Zero()};
  Mode mode2{2, contact, Eigen::Vector4d(0.0, 0.0, 0.0, p.k2 * p.d2 / p.m2)};

  const Eigen::Vector4d e3(0.0, 0.0, 1.0, 0.0);
  PolyhedralCell below{e3, Eigen::VectorXd::Constant(1, -p.d2)};
  PolyhedralCell above{-e3, Eigen::VectorXd::Constant(1, p.d2)};

  Eigen::Vector4d column(0.0, input == InputConvention::kPhysical ? 1.0 / p.m1 : 1.0, 0.0, 0.0);

  return PwaSystem({std::move(mode1), std::move(mode2)}, {std::move(below), std::move(above)},
                   column, 2);
}

std::vector<PolyhedralCell> literal_cells(const MassSpringParams& p) {
  const Eigen::Vector4d e3(0.0, 0.0, 1.0, 0.0);
  return {PolyhedralCell{e3, Eigen::VectorXd::Constant(1, p.d2)},
          PolyhedralCell{-e3, Eigen::VectorXd::Constant(1, -p.d2)}};
}

std::vector<PolyhedralCell> synthesis_cells(const PwaSystem& sys, const MassSpringParams& params,
                                            CellConvention convention) {
  if (convention == CellConvention::kLiteral) return literal_cells(params);
  return sys.cells();
}

}  // namespace pwasync
