#include "chronoscale/timescale.hpp"

#include "chronoscale/error.hpp"
#include "chronoscale/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chronoscale {

namespace {

bool near(double a, double b) { return a == b || std::abs(a - b) <= kTimeTol; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// --- generators -------------------------------------------------------------

class PeriodicGenerator final : public SegmentGenerator {
public:
  PeriodicGenerator(std::vector<Segment> cell, double period, double origin,
                    std::optional<std::int64_t> first_cell)
      : cell_(std::move(cell)), period_(period), origin_(origin), first_(first_cell) {
    if (!(period_ > 0.0) || !std::isfinite(period_)) {
      fail(ErrorKind::InvalidArgument, "periodic pattern: period must be positive and finite");
    }
    if (cell_.empty()) fail(ErrorKind::InvalidArgument, "periodic pattern: empty cell");
    std::sort(cell_.begin(), cell_.end(),
              [](const Segment& a, const Segment& b) { return a.left < b.left; });
    for (std::size_t i = 0; i < cell_.size(); ++i) {
      const Segment& s = cell_[i];
      if (!(s.left <= s.right) || s.left < 0.0 || s.right >= period_) {
        fail(ErrorKind::InvalidArgument, "periodic pattern: cell segments must lie in [0, period)");
      }
      if (i > 0 && !(s.left > cell_[i - 1].right)) {
        fail(ErrorKind::InvalidArgument, "periodic pattern: cell segments must be disjoint");
      }
    }
    const double wrap = period_ + cell_.front().left - cell_.back().right;
    if (!(wrap > kTimeTol)) {
      fail(ErrorKind::InvalidArgument, "periodic pattern: consecutive cells must be separated");
    }
    mu_star_ = wrap;
    for (std::size_t i = 1; i < cell_.size(); ++i) {
      mu_star_ = std::max(mu_star_, cell_[i].left - cell_[i - 1].right);
    }
  }

  std::vector<Segment> segments_in(double a, double b) const override {
    std::vector<Segment> out;
    if (b < a) return out;
    std::int64_t k = clamp_cell(cell_index(a) - 1);
    const std::int64_t k_hi = cell_index(b) + 1;
    if (k_hi - k > 50'000'000) {
      fail(ErrorKind::InvalidArgument, "periodic pattern: window too large to enumerate");
    }
    for (; k <= k_hi; ++k) {
      for (const Segment& s : cell_) {
        const Segment g = shifted(s, k);
        if (g.right >= a - kTimeTol && g.left <= b + kTimeTol) out.push_back(g);
      }
    }
    return out;
  }

  std::optional<Segment> first_after(double x) const override {
    for (std::int64_t k = clamp_cell(cell_index(x) - 1), end = k + 4; k <= end; ++k) {
      for (const Segment& s : cell_) {
        const Segment g = shifted(s, k);
        if (g.left > x + kTimeTol) return g;
      }
    }
    return std::nullopt;
  }

  std::optional<Segment> last_before(double x) const override {
    for (std::int64_t k = cell_index(x) + 1, end = k - 4; k >= end; --k) {
      if (first_ && k < *first_) break;
      for (auto it = cell_.rbegin(); it != cell_.rend(); ++it) {
        const Segment g = shifted(*it, k);
        if (g.right < x - kTimeTol) return g;
      }
    }
    return std::nullopt;
  }

  double start() const override {
    return first_ ? shifted(cell_.front(), *first_).left : -kInf;
  }
  double sup() const override { return kInf; }
  double mu_star() const override { return mu_star_; }
  std::string describe() const override {
    return "periodic(period=" + fmt(period_) + ", origin=" + fmt(origin_) + ")";
  }

private:
  std::int64_t cell_index(double x) const {
    const double k = std::floor((x - origin_) / period_);
    return static_cast<std::int64_t>(std::clamp(k, -4.0e18, 4.0e18));
  }
  std::int64_t clamp_cell(std::int64_t k) const { return first_ ? std::max(k, *first_) : k; }
  Segment shifted(const Segment& s, std::int64_t k) const {
    const double base = origin_ + double(k) * period_;
    return {base + s.left, base + s.right};
  }

  std::vector<Segment> cell_;
  double period_;
  double origin_;
  std::optional<std::int64_t> first_;
  double mu_star_ = 0.0;
};

class SequenceGenerator final : public SegmentGenerator {
public:
  SequenceGenerator(std::function<double(std::int64_t)> point, std::int64_t first,
                    std::string name, double declared_mu_star)
      : point_(std::move(point)), first_(first), name_(std::move(name)),
        mu_star_(declared_mu_star) {
    if (!std::isfinite(point_(first_))) {
      fail(ErrorKind::InvalidArgument, "sequence pattern: first point is not finite");
    }
    // Locate the first non-finite index by doubling, then bisection.
    std::int64_t good = first_;
    std::int64_t step = 1;
    std::int64_t bad = -1;
    while (step < (std::int64_t{1} << 40)) {
      const std::int64_t probe = first_ + step;
      if (!std::isfinite(point_(probe))) {
        bad = probe;
        break;
      }
      good = probe;
      step *= 2;
    }
    if (bad < 0) {
      end_ = std::numeric_limits<std::int64_t>::max();
    } else {
      while (bad - good > 1) {
        const std::int64_t mid = good + (bad - good) / 2;
        (std::isfinite(point_(mid)) ? good : bad) = mid;
      }
      end_ = bad;
    }
  }

  std::vector<Segment> segments_in(double a, double b) const override {
    std::vector<Segment> out;
    for (std::int64_t n = lower_index([&](double p) { return p >= a - kTimeTol; });
         n < end_; ++n) {
      const double p = point_(n);
      if (p > b + kTimeTol) break;
      out.push_back({p, p});
    }
    return out;
  }

  std::optional<Segment> first_after(double x) const override {
    const std::int64_t n = lower_index([&](double p) { return p > x + kTimeTol; });
    if (n >= end_) return std::nullopt;
    const double p = point_(n);
    return Segment{p, p};
  }

  std::optional<Segment> last_before(double x) const override {
    const std::int64_t n = lower_index([&](double p) { return p >= x - kTimeTol; });
    if (n <= first_) return std::nullopt;
    const double p = point_(n - 1);
    return Segment{p, p};
  }

  double start() const override { return point_(first_); }
  double sup() const override {
    return end_ == std::numeric_limits<std::int64_t>::max() ? kInf : point_(end_ - 1);
  }
  double mu_star() const override { return mu_star_; }
  std::string describe() const override { return name_; }

private:
  // Smallest index n in [first, end) with pred(point(n)), or end.
  template <class Pred>
  std::int64_t lower_index(Pred pred) const {
    std::int64_t lo = first_;
    if (pred(point_(lo))) return lo;
    // Exponential search for an upper bracket.
    std::int64_t step = 1;
    std::int64_t hi = lo;
    for (;;) {
      const std::int64_t probe =
          (end_ - lo > step) ? lo + step : end_;
      if (probe >= end_) {
        hi = end_;
        break;
      }
      if (pred(point_(probe))) {
        hi = probe;
        break;
      }
      lo = probe;
      step *= 2;
    }
    while (hi - lo > 1) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      (pred(point_(mid)) ? hi : lo) = mid;
    }
    return hi;
  }

  std::function<double(std::int64_t)> point_;
  std::int64_t first_;
  std::string name_;
  double mu_star_;
  std::int64_t end_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RandomSyndeticGenerator final : public SegmentGenerator {
public:
  RandomSyndeticGenerator(std::uint64_t seed, double mu_max, double origin)
      : seed_(seed), mu_max_(mu_max), width_(mu_max / 2.0), origin_(origin) {
    if (!(mu_max > 0.0) || !std::isfinite(mu_max)) {
      fail(ErrorKind::InvalidArgument, "random-syndetic: mu_max must be positive");
    }
  }

  std::vector<Segment> segments_in(double a, double b) const override {
    std::vector<Segment> out;
    if (b < a) return out;
    const std::int64_t k_hi = cell_index(b) + 1;
    for (std::int64_t k = std::max<std::int64_t>(0, cell_index(a) - 1); k <= k_hi; ++k) {
      for (const Segment& g : cell(k)) {
        if (g.right >= a - kTimeTol && g.left <= b + kTimeTol) out.push_back(g);
      }
    }
    return out;
  }

  std::optional<Segment> first_after(double x) const override {
    for (std::int64_t k = std::max<std::int64_t>(0, cell_index(x) - 1), end = k + 4; k <= end;
         ++k) {
      for (const Segment& g : cell(k)) {
        if (g.left > x + kTimeTol) return g;
      }
    }
    return std::nullopt;
  }

  std::optional<Segment> last_before(double x) const override {
    for (std::int64_t k = cell_index(x) + 1, end = k - 4; k >= end && k >= 0; --k) {
      const auto segs = cell(k);
      for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
        if (it->right < x - kTimeTol) return *it;
      }
    }
    return std::nullopt;
  }

  double start() const override { return cell(0).front().left; }
  double sup() const override { return kInf; }
  double mu_star() const override { return mu_max_; }
  std::string describe() const override {
    return "random-syndetic(seed=" + std::to_string(seed_) + ", mu_max=" + fmt(mu_max_) + ")";
  }

private:
  std::int64_t cell_index(double x) const {
    const double k = std::floor((x - origin_) / width_);
    return static_cast<std::int64_t>(std::clamp(k, -4.0e18, 4.0e18));
  }

  std::vector<Segment> cell(std::int64_t k) const {
    std::uint64_t state = splitmix64(seed_ ^ (std::uint64_t(k) * 0xd1b54a32d192ed03ULL));
    auto uniform = [&state] {
      state = splitmix64(state);
      return double(state >> 11) * 0x1.0p-53;
    };
    const double base = origin_ + double(k) * width_;
    const int kind = static_cast<int>(uniform() * 3.0);
    if (kind == 0) {
      const double p = base + (0.05 + 0.9 * uniform()) * width_;
      return {{p, p}};
    }
    if (kind == 1) {
      const double l = base + (0.05 + 0.4 * uniform()) * width_;
      const double r = base + (0.5 + 0.45 * uniform()) * width_;
      return {{l, r}};
    }
    const double p = base + (0.05 + 0.4 * uniform()) * width_;
    const double q = base + (0.55 + 0.4 * uniform()) * width_;
    return {{p, p}, {q, q}};
  }

  std::uint64_t seed_;
  double mu_max_;
  double width_;
  double origin_;
};

}  // namespace

std::shared_ptr<const SegmentGenerator> make_periodic_generator(
    std::vector<Segment> cell, double period, double origin,
    std::optional<std::int64_t> first_cell) {
  return std::make_shared<PeriodicGenerator>(std::move(cell), period, origin, first_cell);
}

std::shared_ptr<const SegmentGenerator> make_sequence_generator(
    std::function<double(std::int64_t)> point, std::int64_t first, std::string name,
    double declared_mu_star) {
  return std::make_shared<SequenceGenerator>(std::move(point), first, std::move(name),
                                             declared_mu_star);
}

std::shared_ptr<const SegmentGenerator> make_random_syndetic_generator(std::uint64_t seed,
                                                                       double mu_max,
                                                                       double origin) {
  return std::make_shared<RandomSyndeticGenerator>(seed, mu_max, origin);
}

// --- TimeScale --------------------------------------------------------------

TimeScale::TimeScale(std::vector<Segment> segments,
                     std::shared_ptr<const SegmentGenerator> tail)
    : segments_(std::move(segments)), tail_(std::move(tail)) {
  if (segments_.empty() && !tail_) {
    fail(ErrorKind::InvalidArgument, "time scale must be non-empty");
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (std::isnan(s.left) || std::isnan(s.right) || !(s.left <= s.right)) {
      fail(ErrorKind::InvalidArgument, "segment with left > right");
    }
    if (s.left == kInf || s.right == -kInf) {
      fail(ErrorKind::InvalidArgument, "segment endpoints must be finite on the inner side");
    }
    if (s.left == -kInf && i != 0) {
      fail(ErrorKind::InvalidArgument, "only the first segment may start at -inf");
    }
    if (s.unbounded() && i + 1 != segments_.size()) {
      fail(ErrorKind::InvalidArgument, "only the last segment may be unbounded");
    }
    if (i > 0 && !(s.left > segments_[i - 1].right + kTimeTol)) {
      fail(ErrorKind::InvalidArgument, "segments must be sorted with positive gaps");
    }
  }
  if (tail_ && !segments_.empty()) {
    if (segments_.back().unbounded() || !(tail_->start() > segments_.back().right + kTimeTol)) {
      fail(ErrorKind::InvalidArgument, "generated tail must start after the last segment");
    }
  }
}

TimeScale canonicalize(std::vector<Segment> raw) {
  if (raw.empty()) fail(ErrorKind::InvalidArgument, "canonicalize: empty interval list");
  int unbounded = 0;
  for (const Segment& s : raw) {
    if (std::isnan(s.left) || std::isnan(s.right) || !(s.left <= s.right)) {
      fail(ErrorKind::InvalidArgument, "canonicalize: interval with left > right");
    }
    if (s.unbounded()) ++unbounded;
  }
  if (unbounded > 1) {
    fail(ErrorKind::InvalidArgument, "canonicalize: more than one unbounded interval");
  }
  std::sort(raw.begin(), raw.end(),
            [](const Segment& a, const Segment& b) { return a.left < b.left; });
  std::vector<Segment> merged;
  for (const Segment& s : raw) {
    if (!merged.empty() && s.left <= merged.back().right + kTimeTol) {
      merged.back().right = std::max(merged.back().right, s.right);
    } else {
      merged.push_back(s);
    }
  }
  return TimeScale(std::move(merged));
}

std::vector<Segment> TimeScale::segments_in(double a, double b) const {
  std::vector<Segment> out;
  for (const Segment& s : segments_) {
    if (s.right >= a - kTimeTol && s.left <= b + kTimeTol) out.push_back(s);
  }
  if (tail_) {
    auto more = tail_->segments_in(a, b);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::optional<Segment> TimeScale::containing(double t) const {
  if (!std::isfinite(t)) return std::nullopt;
  for (const Segment& s : segments_in(t, t)) {
    if (t >= s.left - kTimeTol && t <= s.right + kTimeTol) return s;
  }
  return std::nullopt;
}

std::optional<Segment> TimeScale::next_after(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x + kTimeTol,
                             [](double v, const Segment& s) { return v < s.left; });
  if (it != segments_.end()) return *it;
  if (tail_) return tail_->first_after(x);
  return std::nullopt;
}

std::optional<Segment> TimeScale::previous_before(double x) const {
  if (tail_) {
    if (auto s = tail_->last_before(x)) return s;
  }
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    if (it->right < x - kTimeTol) return *it;
  }
  return std::nullopt;
}

bool TimeScale::contains(double t) const { return containing(t).has_value(); }

double TimeScale::inf() const {
  return segments_.empty() ? tail_->start() : segments_.front().left;
}

double TimeScale::sup() const { return tail_ ? tail_->sup() : segments_.back().right; }

double TimeScale::forward_jump(double t) const {
  const auto seg = containing(t);
  if (!seg) fail(ErrorKind::NotInScale, "forward_jump: " + fmt(t) + " is not in the time scale");
  if (t < seg->right - kTimeTol) return t;
  if (const auto next = next_after(seg->right)) return next->left;
  return seg->right;  // sigma(sup T) = sup T
}

double TimeScale::backward_jump(double t) const {
  const auto seg = containing(t);
  if (!seg) fail(ErrorKind::NotInScale, "backward_jump: " + fmt(t) + " is not in the time scale");
  if (t > seg->left + kTimeTol) return t;
  if (const auto prev = previous_before(seg->left)) return prev->right;
  return seg->left;
}

double TimeScale::graininess(double t) const {
  const auto seg = containing(t);
  if (!seg) fail(ErrorKind::NotInScale, "graininess: " + fmt(t) + " is not in the time scale");
  if (t < seg->right - kTimeTol) return 0.0;
  return forward_jump(seg->right) - seg->right;
}

PointClass TimeScale::classify(double t) const {
  const double mu = graininess(t);
  const double rho = backward_jump(t);
  return {mu > 0.0 ? RightClass::RightScattered : RightClass::RightDense,
          rho < t - kTimeTol ? LeftClass::LeftScattered : LeftClass::LeftDense};
}

double TimeScale::mu_star() const {
  double m = 0.0;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    m = std::max(m, segments_[i].left - segments_[i - 1].right);
  }
  if (tail_) {
    if (!segments_.empty()) m = std::max(m, tail_->start() - segments_.back().right);
    m = std::max(m, tail_->mu_star());
  }
  return m;
}

double TimeScale::mu_star(Window window) const {
  const auto segs = segments_in(window.start, window.end);
  double m = 0.0;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i - 1].right >= window.start - kTimeTol && segs[i].left <= window.end + kTimeTol) {
      m = std::max(m, segs[i].left - segs[i - 1].right);
    }
  }
  return m;
}

double TimeScale::nu_star() const {
  const double m = mu_star();
  if (m == 0.0) return kInf;
  // sup of the complement: +inf when the scale has gaps arbitrarily far out.
  bool complement_reaches_positive = false;
  if (tail_ || !segments_.back().unbounded()) {
    complement_reaches_positive = true;
  } else {
    const Segment& last = segments_.back();
    const bool complement_nonempty = segments_.size() > 1 || last.left > -kInf;
    complement_reaches_positive = complement_nonempty && last.left > 0.0;
  }
  return complement_reaches_positive ? 1.0 / m : kInf;
}

// --- Grid -----------------------------------------------------------------

Grid::Grid(std::vector<GridPoint> points, double h, Window window)
    : points_(std::make_shared<const std::vector<GridPoint>>(std::move(points))),
      h_(h),
      window_(window) {
  if (points_->empty()) fail(ErrorKind::InvalidArgument, "grid must contain at least one point");
  for (std::size_t i = 0; i < points_->size(); ++i) {
    const GridPoint& p = (*points_)[i];
    if ((p.kind == RightClass::RightScattered) != (p.mu > 0.0)) {
      fail(ErrorKind::InvalidArgument, "grid point kind inconsistent with graininess");
    }
    if (i > 0) {
      const GridPoint& q = (*points_)[i - 1];
      if (!(p.t > q.t)) fail(ErrorKind::InvalidArgument, "grid times must be strictly increasing");
      if (q.kind == RightClass::RightDense && p.t - q.t > h_ * (1 + 1e-9)) {
        fail(ErrorKind::InvalidArgument, "dense samples further apart than h");
      }
    }
  }
}

std::vector<double> Grid::times() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = (*this)[i].t;
  return out;
}

std::optional<std::size_t> Grid::find(double t) const {
  const auto& pts = *points_;
  auto it = std::lower_bound(pts.begin(), pts.end(), t - kTimeTol,
                             [](const GridPoint& p, double v) { return p.t < v; });
  if (it != pts.end() && near(it->t, t)) return std::size_t(it - pts.begin());
  return std::nullopt;
}

std::size_t Grid::index_of(double t) const {
  if (auto i = find(t)) return *i;
  fail(ErrorKind::NotInScale, "time " + fmt(t) + " is not a grid point");
}

double Grid::mu_at(double t) const {
  if (auto i = find(t)) return (*this)[*i].mu;
  const auto& pts = *points_;
  auto it = std::upper_bound(pts.begin(), pts.end(), t,
                             [](double v, const GridPoint& p) { return v < p.t; });
  if (it == pts.begin() || it == pts.end()) {
    fail(ErrorKind::NotInScale, "time " + fmt(t) + " outside the sampled window");
  }
  const GridPoint& left = *(it - 1);
  if (left.kind == RightClass::RightDense) return 0.0;
  fail(ErrorKind::NotInScale, "time " + fmt(t) + " lies in a gap of the time scale");
}

bool Grid::has_successor(std::size_t i) const {
  if (i + 1 >= size()) return false;
  const GridPoint& p = (*this)[i];
  const GridPoint& q = (*this)[i + 1];
  if (p.kind == RightClass::RightScattered) {
    return std::abs((q.t - p.t) - p.mu) <= 1e-12 * std::max(1.0, std::abs(q.t));
  }
  return p.segment == q.segment;
}

Grid build_grid(const TimeScale& scale, Window window, double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "grid step h must be positive");
  if (!(window.start <= window.end)) fail(ErrorKind::InvalidArgument, "window start after end");
  const auto segs = scale.segments_in(window.start, window.end);
  std::vector<GridPoint> points;
  std::size_t seg_id = 0;
  for (const Segment& s : segs) {
    const double l = std::max(s.left, window.start);
    const double r = std::min(s.right, window.end);
    if (l > r + kTimeTol) continue;
    const bool true_right_end = near(r, s.right);
    auto end_mu = [&] {
      return true_right_end ? scale.forward_jump(s.right) - s.right : 0.0;
    };
    if (r - l <= kTimeTol) {
      const double mu = near(l, s.right) ? end_mu() : 0.0;
      points.push_back({l, mu > 0.0 ? RightClass::RightScattered : RightClass::RightDense, mu,
                        seg_id});
    } else {
      const auto n = static_cast<std::size_t>(std::ceil((r - l) / h - 1e-9));
      const double step = (r - l) / double(n);
      for (std::size_t k = 0; k < n; ++k) {
        points.push_back({l + double(k) * step, RightClass::RightDense, 0.0, seg_id});
      }
      const double mu = end_mu();
      points.push_back({r, mu > 0.0 ? RightClass::RightScattered : RightClass::RightDense, mu,
                        seg_id});
    }
    ++seg_id;
  }
  if (points.empty()) {
    fail(ErrorKind::InvalidArgument, "window does not intersect the time scale");
  }
  return Grid(std::move(points), h, window);
}

// --- Delta calculus -----------------------------------------------------------

namespace {

struct Stencil {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

Stencil delta_stencil(std::size_t i, const Grid& grid) {
  if (i >= grid.size()) fail(ErrorKind::InvalidArgument, "grid index out of range");
  const GridPoint& p = grid[i];
  if (p.kind == RightClass::RightScattered) {
    if (!grid.has_successor(i)) {
      fail(ErrorKind::InvalidArgument,
           "no admissible stencil: sigma(" + fmt(p.t) + ") lies outside the grid");
    }
    return {{i, i + 1}, {-1.0 / p.mu, 1.0 / p.mu}};
  }
  // Dense point: the run of samples belonging to the same segment.
  std::size_t lo = i;
  std::size_t hi = i;
  while (lo > 0 && grid[lo - 1].segment == p.segment) --lo;
  while (hi + 1 < grid.size() && grid[hi + 1].segment == p.segment) ++hi;
  const std::size_t run = hi - lo + 1;
  if (run < 2) {
    fail(ErrorKind::InvalidArgument,
         "no admissible stencil at " + fmt(p.t) + ": isolated right-dense point");
  }
  const std::size_t width = std::min<std::size_t>(5, run);
  std::size_t first = (i >= lo + width / 2) ? i - width / 2 : lo;
  if (first + width - 1 > hi) first = hi + 1 - width;
  Stencil st;
  std::vector<double> nodes;
  for (std::size_t k = first; k < first + width; ++k) {
    st.index.push_back(k);
    nodes.push_back(grid[k].t);
  }
  st.weight = derivative_weights(p.t, nodes);
  return st;
}

std::pair<std::size_t, std::size_t> integral_range(double a, double b, const Grid& grid) {
  if (a > b) fail(ErrorKind::InvalidArgument, "delta_integral: a > b");
  return {grid.index_of(a), grid.index_of(b)};
}

}  // namespace

double delta_integral(std::span<const double> samples, double a, double b, const Grid& grid) {
  if (samples.size() != grid.size()) {
    fail(ErrorKind::InvalidArgument, "delta_integral: sample count differs from grid size");
  }
  const auto [ia, ib] = integral_range(a, b, grid);
  double sum = 0.0;
  for (std::size_t k = ia; k < ib; ++k) {
    if (grid.is_jump(k)) {
      sum += grid[k].mu * samples[k];
    } else {
      sum += 0.5 * grid.step(k) * (samples[k] + samples[k + 1]);
    }
  }
  return sum;
}

Eigen::VectorXd delta_integral(const Eigen::MatrixXd& samples, double a, double b,
                               const Grid& grid) {
  if (std::size_t(samples.cols()) != grid.size()) {
    fail(ErrorKind::InvalidArgument, "delta_integral: sample count differs from grid size");
  }
  const auto [ia, ib] = integral_range(a, b, grid);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(samples.rows());
  for (std::size_t k = ia; k < ib; ++k) {
    if (grid.is_jump(k)) {
      sum += grid[k].mu * samples.col(k);
    } else {
      sum += 0.5 * grid.step(k) * (samples.col(k) + samples.col(k + 1));
    }
  }
  return sum;
}

double delta_integral(const std::function<double(double)>& f, double a, double b,
                      const Grid& grid) {
  std::vector<double> samples(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) samples[k] = f(grid[k].t);
  return delta_integral(samples, a, b, grid);
}

bool has_delta_stencil(std::size_t i, const Grid& grid) {
  if (i >= grid.size()) return false;
  if (grid.is_jump(i)) return grid.has_successor(i);
  const auto seg = grid[i].segment;
  return (i > 0 && grid[i - 1].segment == seg) ||
         (i + 1 < grid.size() && grid[i + 1].segment == seg);
}

double delta_derivative(std::span<const double> samples, std::size_t i, const Grid& grid) {
  const Stencil st = delta_stencil(i, grid);
  double d = 0.0;
  for (std::size_t k = 0; k < st.index.size(); ++k) d += st.weight[k] * samples[st.index[k]];
  return d;
}

Eigen::VectorXd delta_derivative(const Eigen::MatrixXd& samples, std::size_t i,
                                 const Grid& grid) {
  const Stencil st = delta_stencil(i, grid);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(samples.rows());
  for (std::size_t k = 0; k < st.index.size(); ++k) {
    d += st.weight[k] * samples.col(st.index[k]);
  }
  return d;
}

double delta_derivative_numeric(const std::function<double(double)>& f, double t,
                                const Grid& grid) {
  const Stencil st = delta_stencil(grid.index_of(t), grid);
  double d = 0.0;
  for (std::size_t k = 0; k < st.index.size(); ++k) d += st.weight[k] * f(grid[st.index[k]].t);
  return d;
}

}  // namespace chronoscale
