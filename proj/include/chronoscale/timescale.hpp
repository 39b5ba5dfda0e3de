#pragma once

// Time scales (closed subsets of the real line built from finitely many
// closed intervals plus an optional generated tail), finite sampling grids,
// and the Delta-calculus primitives that operate on them.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chronoscale {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Absolute tolerance used for every endpoint / membership comparison.
inline constexpr double kTimeTol = 1e-12;

/// Closed interval [left, right]; left == right encodes an isolated point.
struct Segment {
  double left;
  double right;

  bool degenerate() const { return left == right; }
  bool unbounded() const { return right == kInf; }
};

struct Window {
  double start;
  double end;
};

/// Source of the (possibly infinite) tail of a time scale. Implementations
/// must produce sorted, pairwise disjoint segments separated by positive gaps.
class SegmentGenerator {
public:
  virtual ~SegmentGenerator() = default;

  /// Every generated segment intersecting [a, b], in increasing order.
  virtual std::vector<Segment> segments_in(double a, double b) const = 0;
  /// First generated segment whose left endpoint is > x.
  virtual std::optional<Segment> first_after(double x) const = 0;
  /// Last generated segment whose right endpoint is < x.
  virtual std::optional<Segment> last_before(double x) const = 0;

  virtual double start() const = 0;  // inf of the generated part (may be -inf)
  virtual double sup() const = 0;    // sup of the generated part (usually +inf)
  /// sup of the graininess over the generated part, +inf when gaps grow unboundedly.
  virtual double mu_star() const = 0;
  virtual std::string describe() const = 0;
};

/// Repeats a cell pattern: cell k covers [origin + k*period, origin + (k+1)*period).
/// `first_cell` empty means the pattern extends to -infinity as well.
std::shared_ptr<const SegmentGenerator> make_periodic_generator(
    std::vector<Segment> cell, double period, double origin,
    std::optional<std::int64_t> first_cell);

/// Strictly increasing point sequence n -> point(n), n >= first. A non-finite
/// value terminates the sequence.
std::shared_ptr<const SegmentGenerator> make_sequence_generator(
    std::function<double(std::int64_t)> point, std::int64_t first, std::string name,
    double declared_mu_star = kInf);

/// Deterministic pseudo-random syndetic tail: each cell of width mu_max/2
/// starting at `origin` receives a point, a short interval or a point pair,
/// so consecutive gaps never exceed mu_max.
std::shared_ptr<const SegmentGenerator> make_random_syndetic_generator(
    std::uint64_t seed, double mu_max, double origin);

enum class RightClass { RightDense, RightScattered };
enum class LeftClass { LeftDense, LeftScattered };

struct PointClass {
  RightClass right;
  LeftClass left;
};

/// Canonical time scale: a sorted list of disjoint closed segments (only the
/// last may be unbounded; only the first may start at -infinity), optionally
/// followed by a generated tail.
class TimeScale {
public:
  /// Validates canonical form; throws InvalidArgument otherwise.
  explicit TimeScale(std::vector<Segment> segments,
                     std::shared_ptr<const SegmentGenerator> tail = nullptr);

  const std::vector<Segment>& segments() const { return segments_; }
  const SegmentGenerator* tail() const { return tail_.get(); }

  std::vector<Segment> segments_in(double a, double b) const;
  bool contains(double t) const;

  double inf() const;
  double sup() const;

  double forward_jump(double t) const;   // sigma
  double backward_jump(double t) const;  // rho
  double graininess(double t) const;     // mu = sigma(t) - t
  PointClass classify(double t) const;

  /// sup of the graininess over the whole scale (+inf when unbounded).
  double mu_star() const;
  /// max gap sigma(t) - t over points t in the window whose sigma(t) also lies in it.
  double mu_star(Window window) const;
  bool is_syndetic() const { return mu_star() < kInf; }
  /// 1/mu* when the complement of the scale reaches into (0, inf); +inf otherwise.
  double nu_star() const;

private:
  std::optional<Segment> containing(double t) const;
  std::optional<Segment> next_after(double x) const;
  std::optional<Segment> previous_before(double x) const;

  std::vector<Segment> segments_;
  std::shared_ptr<const SegmentGenerator> tail_;
};

/// Merge, sort and validate an arbitrary finite list of closed intervals.
TimeScale canonicalize(std::vector<Segment> raw);

// --- grids ---------------------------------------------------------------

struct GridPoint {
  double t;
  RightClass kind;
  double mu;              // graininess of the time scale at t
  std::size_t segment;    // index of the owning segment within the window
};

/// Finite ordered sampling of a time-scale window. Right-scattered points are
/// sampled exactly; dense intervals are sampled with a uniform step <= h.
/// Cheap to copy: the point list is shared and immutable.
class Grid {
public:
  Grid(std::vector<GridPoint> points, double h, Window window);

  std::size_t size() const { return points_->size(); }
  const GridPoint& operator[](std::size_t i) const { return (*points_)[i]; }
  const std::vector<GridPoint>& points() const { return *points_; }
  double h() const { return h_; }
  Window window() const { return window_; }
  double front() const { return points_->front().t; }
  double back() const { return points_->back().t; }

  std::vector<double> times() const;

  std::optional<std::size_t> find(double t) const;
  /// Index of t; throws NotInScale when t is not a grid point.
  std::size_t index_of(double t) const;

  /// Graininess at an arbitrary time inside the sampled part of the scale:
  /// grid points report their stored mu, interior points of dense steps 0.
  double mu_at(double t) const;

  /// True when the step i -> i+1 is a jump (point i right-scattered).
  bool is_jump(std::size_t i) const { return (*this)[i].kind == RightClass::RightScattered; }
  /// True when i+1 is the forward successor of point i on the scale.
  bool has_successor(std::size_t i) const;
  double step(std::size_t i) const { return (*this)[i + 1].t - (*this)[i].t; }

private:
  std::shared_ptr<const std::vector<GridPoint>> points_;
  double h_;
  Window window_;
};

Grid build_grid(const TimeScale& scale, Window window, double h);

// --- Delta calculus on sampled functions ----------------------------------

/// Delta integral from a to b (grid points) of samples taken on the grid:
/// exact mu(t) f(t) terms at scattered points, trapezoid on dense steps.
double delta_integral(std::span<const double> samples, double a, double b, const Grid& grid);
/// Column-wise version; samples is dim x grid.size().
Eigen::VectorXd delta_integral(const Eigen::MatrixXd& samples, double a, double b,
                               const Grid& grid);
double delta_integral(const std::function<double(double)>& f, double a, double b,
                      const Grid& grid);

/// Numerical Delta derivative at grid index i: forward quotient at scattered
/// points, finite-difference stencil (up to 5 points, same segment) at dense ones.
double delta_derivative(std::span<const double> samples, std::size_t i, const Grid& grid);
Eigen::VectorXd delta_derivative(const Eigen::MatrixXd& samples, std::size_t i,
                                 const Grid& grid);
/// True when delta_derivative has an admissible stencil at i.
bool has_delta_stencil(std::size_t i, const Grid& grid);
double delta_derivative_numeric(const std::function<double(double)>& f, double t,
                                const Grid& grid);

}  // namespace chronoscale
