#include "ihcube/descriptor.hpp"

#include <algorithm>
#include <cmath>

#include "ihcube/error.hpp"

namespace ihcube {

FeatureDescriptor::FeatureDescriptor(const DescriptorLayout& layout)
    : layout_(layout),
      counts_(layout.count_slots(), 0),
      sums_(layout.sum_slots, 0.0) {}

FeatureDescriptor::FeatureDescriptor(const DescriptorLayout& layout,
                                     std::vector<std::int64_t> counts,
                                     std::vector<double> sums)
    : layout_(layout), counts_(std::move(counts)), sums_(std::move(sums)) {
  if (counts_.size() != layout_.count_slots() ||
      sums_.size() != layout_.sum_slots) {
    throw SchemaError("descriptor slots do not match layout");
  }
  for (double s : sums_) {
    if (!std::isfinite(s)) throw SchemaError("descriptor sum is not finite");
  }
  if (layout_.kind == DescriptorKind::histogram) {
    for (auto c : histogram()) {
      if (c < 0) throw SchemaError("negative histogram bin count");
    }
  }
}

bool FeatureDescriptor::is_zero() const {
  return std::all_of(counts_.begin(), counts_.end(),
                     [](std::int64_t c) { return c == 0; }) &&
         std::all_of(sums_.begin(), sums_.end(),
                     [](double s) { return s == 0.0; });
}

void FeatureDescriptor::add_point(std::span<const double> measures,
                                  std::size_t hist_bin) {
  counts_[0] += 1;
  if (layout_.kind == DescriptorKind::histogram) counts_[1 + hist_bin] += 1;
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += measures[i];
}

void FeatureDescriptor::check_compatible(const FeatureDescriptor& o) const {
  if (!(layout_ == o.layout_) || counts_.size() != o.counts_.size() ||
      sums_.size() != o.sums_.size()) {
    throw SchemaError("descriptor kind/length mismatch");
  }
}

FeatureDescriptor& FeatureDescriptor::operator+=(const FeatureDescriptor& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += o.sums_[i];
  return *this;
}

FeatureDescriptor& FeatureDescriptor::operator-=(const FeatureDescriptor& o) {
  check_compatible(o);
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] -= o.counts_[i];
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] -= o.sums_[i];
  return *this;
}

FeatureDescriptor descriptor_add(const FeatureDescriptor& a,
                                 const FeatureDescriptor& b) {
  return a + b;
}

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::count: return "count";
    case MeasureKind::sum: return "sum";
    case MeasureKind::mean: return "mean";
    case MeasureKind::median: return "median";
  }
  return "count";
}

std::optional<MeasureKind> parse_measure_kind(const std::string& s) {
  if (s == "count") return MeasureKind::count;
  if (s == "sum") return MeasureKind::sum;
  if (s == "mean") return MeasureKind::mean;
  if (s == "median") return MeasureKind::median;
  return std::nullopt;
}

void check_measure_supported(const DescriptorLayout& layout, const Measure& m) {
  if (m.kind == MeasureKind::count) return;
  if (m.target >= layout.sum_slots) {
    throw UnsupportedError("measure target is not a measure dimension");
  }
  if (m.kind == MeasureKind::median &&
      (layout.kind != DescriptorKind::histogram ||
       layout.histogram_measure != m.target)) {
    throw UnsupportedError(
        "median needs a histogram descriptor over the target measure");
  }
}

std::optional<double> estimate_median(std::span<const HistogramComponent> parts) {
  // The combined CDF is piecewise linear: each positive-width bin adds a
  // constant density over [lo, hi), each zero-width bin adds a jump at lo.
  struct Event {
    double x;
    double slope_delta;
    double jump;
  };
  std::vector<Event> events;
  double total = 0.0;
  for (const auto& p : parts) {
    const auto& b = p.binning;
    for (std::size_t i = 0; i < b.bins && i < p.mass.size(); ++i) {
      double m = p.mass[i];
      if (m == 0.0) continue;
      total += m;
      double lo = b.edge(i), hi = b.edge(i + 1);
      if (hi > lo) {
        double slope = m / (hi - lo);
        events.push_back({lo, slope, 0.0});
        events.push_back({hi, -slope, 0.0});
      } else {
        events.push_back({lo, 0.0, m});
      }
    }
  }
  if (!(total > 0.0)) return std::nullopt;
  const double target = total / 2.0;
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.x < b.x; });

  double f = 0.0, slope = 0.0, x = events.front().x;
  for (std::size_t k = 0; k < events.size();) {
    double next = events[k].x;
    if (slope > 0.0 && next > x) {
      double gain = slope * (next - x);
      if (f + gain >= target) return x + (target - f) / slope;
      f += gain;
    }
    x = next;
    double jump = 0.0;
    for (; k < events.size() && events[k].x == x; ++k) {
      jump += events[k].jump;
      slope += events[k].slope_delta;
    }
    if (jump > 0.0 && f + jump >= target) return x;
    f += jump;
    if (slope < 1e-300) slope = 0.0;
    if (f >= target && slope == 0.0) return x;
  }
  return x;
}

std::optional<double> estimate_measure(const FeatureDescriptor& d,
                                       const Measure& m,
                                       const LocalBinning* binning) {
  check_measure_supported(d.layout(), m);
  switch (m.kind) {
    case MeasureKind::count:
      return static_cast<double>(d.count());
    case MeasureKind::sum:
      return d.sums()[m.target];
    case MeasureKind::mean:
      if (d.count() == 0) return std::nullopt;
      return d.sums()[m.target] / static_cast<double>(d.count());
    case MeasureKind::median: {
      if (binning == nullptr) {
        throw UnsupportedError("median estimate needs histogram bin edges");
      }
      HistogramComponent part{*binning, {}};
      for (auto c : d.histogram()) part.mass.push_back(static_cast<double>(c));
      return estimate_median(std::span<const HistogramComponent>(&part, 1));
    }
  }
  return std::nullopt;
}

}  // namespace ihcube
