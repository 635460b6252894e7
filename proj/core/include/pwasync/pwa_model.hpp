#pragma once

#include <vector>

#include <Eigen/Dense>

namespace pwasync {

/// States are ordered [position m1, velocity m1, position m2, velocity m2].
using StateVector = Eigen::VectorXd;

/// Physical constants of the two-mass compliant handling model.
struct MassSpringParams {
  double m1 = 100.0;  ///< master-side mass (kg)
  double m2 = 1.0;    ///< object mass (kg)
  double c = 2.0;     ///< robot-object damping (N s/m)
  double c1 = 2.0;    ///< robot-ground damping (N s/m)
  double k = 10.0;    ///< robot-object stiffness (N/m)
  double k2 = 10.0;   ///< object-second-robot contact stiffness (N/m)
  double d2 = 0.01;   ///< contact offset (m)

  /// Throws std::invalid_argument naming the first offending field. Dampings
  /// may be zero (undamped analogues); masses and stiffnesses may not.
  void validate() const;

  bool operator==(const MassSpringParams&) const = default;
};

/// Which input column the plant uses.
enum class InputConvention {
  kPhysical,      ///< B = [0, 1/m1, 0, 0]^T, the force enters through m1
  kUnitInput,  ///< B = [0, 1, 0, 0]^T, the force enters as an acceleration
};

/// Which H/h data the LMI synthesis sees for the two cells.
enum class CellConvention {
  kCanonical,     ///< mode 1 on {x3 < d2}, mode 2 on {x3 > d2}
  kLiteral,  ///< H1 = e3, h1 = d2, H2 = -e3, h2 = -d2, offsets not sign-corrected
};

struct Mode {
  int index = 0;  ///< 1-based
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// Open polyhedron {x | H^T x + h < 0}, componentwise.
struct PolyhedralCell {
  Eigen::MatrixXd H;  ///< n x r
  Eigen::VectorXd h;  ///< r

  int facets() const { return static_cast<int>(h.size()); }
  bool contains(const StateVector& x) const;
};

/// Piecewise-affine plant xdot = A_m x + B u + b_m, m = mode_of(x).
class PwaSystem {
 public:
  /// `boundary_mode` is returned by mode_of for states in no open cell.
  /// Throws std::invalid_argument on inconsistent dimensions.
  PwaSystem(std::vector<Mode> modes, std::vector<PolyhedralCell> cells,
            Eigen::VectorXd input_column, int boundary_mode);

  int state_dim() const { return static_cast<int>(input_column_.size()); }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  const std::vector<Mode>& modes() const { return modes_; }
  const std::vector<PolyhedralCell>& cells() const { return cells_; }
  const Eigen::VectorXd& input_column() const { return input_column_; }
  int boundary_mode() const { return boundary_mode_; }

  /// Mode with 1-based index `index`.
  const Mode& mode(int index) const;

  /// 1-based index of the first open cell containing x; boundary states go
  /// to boundary_mode().
  int mode_of(const StateVector& x) const;

  /// A_m x + B u + b_m for an explicitly chosen mode.
  StateVector mode_field(int index, const StateVector& x, double u) const;

  StateVector vector_field(const StateVector& x, double u) const;

 private:
  std::vector<Mode> modes_;
  std::vector<PolyhedralCell> cells_;
  Eigen::VectorXd input_column_;
  int boundary_mode_;
};

/// Two-mode master/slave plant: mode 1 is free motion, mode 2 has the
/// second robot's contact spring engaged. Boundary states belong to mode 2.
PwaSystem build_coupled_system(const MassSpringParams& params,
                               InputConvention input = InputConvention::kPhysical);

/// Cell data matching the reference gains, with the offsets left
/// un-negated. Only meaningful as LMI data; mode selection always uses
/// the canonical cells of build_coupled_system.
std::vector<PolyhedralCell> literal_cells(const MassSpringParams& params);

std::vector<PolyhedralCell> synthesis_cells(const PwaSystem& sys, const MassSpringParams& params,
                                            CellConvention convention);

}  // namespace pwasync
