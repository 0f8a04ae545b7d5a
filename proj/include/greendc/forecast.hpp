#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "greendc/csv.hpp"
#include "greendc/errors.hpp"
#include "greendc/svr.hpp"

namespace greendc {

struct SolarRecord {
  std::string timestamp;  // ISO 8601, hourly cadence
  int hour_of_day = 0;
  double ghi = 0.0;  // global horizontal irradiance, W/m^2
};

inline std::vector<SolarRecord> load_irradiance(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, {"timestamp_iso8601", "ghi_w_m2"}, path);
  std::vector<SolarRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::size_t row = t.row_numbers[i];
    SolarRecord rec;
    rec.timestamp = t.rows[i][0];
    int y = 0, mo = 0, da = 0, h = 0, mi = 0;
    if (std::sscanf(rec.timestamp.c_str(), "%4d-%2d-%2dT%2d:%2d", &y, &mo, &da, &h, &mi) != 5 ||
        h < 0 || h > 23)
      throw ParseError(path + ": bad timestamp '" + rec.timestamp + "'", row);
    rec.hour_of_day = h;
    rec.ghi = parse_double(t.rows[i][1], "ghi_w_m2", row);
    if (rec.ghi < 0.0) throw ParseError(path + ": negative irradiance", row);
    if (!out.empty() && rec.hour_of_day != (out.back().hour_of_day + 1) % 24)
      throw ParseError(path + ": timestamps must advance in 1h steps", row);
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw ParseError(path + ": no data rows", 1);
  return out;
}

namespace detail {

inline std::vector<double> solar_features(int hour_of_day, double lag_1h, double lag_24h) {
  constexpr double two_pi = 6.283185307179586;
  double phase = two_pi * static_cast<double>(hour_of_day) / 24.0;
  return {std::sin(phase), std::cos(phase), lag_1h, lag_24h};
}

}  // namespace detail

struct SolarMetrics {
  double r2 = 0.0;
  double pearson_r = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

// Day-ahead irradiance model: cyclic hour-of-day encoding plus 1h and 24h
// lags, regressed with the epsilon-insensitive SVR. Forecasts run
// recursively, feeding each predicted hour back in as the next 1h lag.
class SolarModel {
public:
  static SolarModel train(std::span<const SolarRecord> records, const SvrParams& params = {},
                          double train_fraction = 0.8) {
    if (records.size() < 48)
      throw InsufficientDataError("solar training needs at least 48 hourly records");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
      throw ConfigError("train fraction must lie in (0, 1)");

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (std::size_t i = 24; i < records.size(); ++i) {
      xs.push_back(detail::solar_features(records[i].hour_of_day, records[i - 1].ghi,
                                          records[i - 24].ghi));
      ys.push_back(records[i].ghi);
    }
    std::size_t n = xs.size();
    std::size_t ntrain = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    if (ntrain < 2 || ntrain >= n)
      throw InsufficientDataError("split leaves an empty train or test partition");

    SolarModel m;
    m.svr_ = Svr::fit({xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(ntrain)},
                      {ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(ntrain)}, params);
    m.metrics_.train_rows = ntrain;
    m.metrics_.test_rows = n - ntrain;

    // Held-out tail metrics, one-step-ahead (true lags).
    double sy = 0.0, sp = 0.0, syy = 0.0, spp = 0.0, syp = 0.0, ss_res = 0.0;
    std::size_t k = 0;
    for (std::size_t i = ntrain; i < n; ++i, ++k) {
      double pred = m.svr_.predict(xs[i]);
      double truth = ys[i];
      sy += truth;
      sp += pred;
      syy += truth * truth;
      spp += pred * pred;
      syp += truth * pred;
      ss_res += (truth - pred) * (truth - pred);
    }
    double nk = static_cast<double>(k);
    double mean_y = sy / nk;
    double ss_tot = syy - nk * mean_y * mean_y;
    m.metrics_.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                                 : std::numeric_limits<double>::quiet_NaN();
    double cov = syp - sy * sp / nk;
    double vy = syy - sy * sy / nk;
    double vp = spp - sp * sp / nk;
    m.metrics_.pearson_r = (vy > 0.0 && vp > 0.0)
                               ? cov / std::sqrt(vy * vp)
                               : std::numeric_limits<double>::quiet_NaN();

    // Forecast seed: last 24 observations plus the final hour index.
    m.tail_.assign(records.end() - 24, records.end());
    return m;
  }

  const SolarMetrics& metrics() const { return metrics_; }

  // Hours following the end of the training series. Recursive on the 1h
  // lag; the 24h lag reads observed history for the first day out and
  // predictions beyond that. Output clamped at zero.
  std::vector<double> predict_hours(std::size_t count) const {
    std::vector<double> lagbuf;
    lagbuf.reserve(tail_.size() + count);
    for (const auto& r : tail_) lagbuf.push_back(r.ghi);
    std::vector<double> out;
    int last_hour = tail_.back().hour_of_day;
    for (std::size_t k = 0; k < count; ++k) {
      int h = (last_hour + 1 + static_cast<int>(k)) % 24;
      double lag1 = lagbuf.back();
      double lag24 = lagbuf[lagbuf.size() - 24];
      double pred = std::max(0.0, svr_.predict(detail::solar_features(h, lag1, lag24)));
      out.push_back(pred);
      lagbuf.push_back(pred);
    }
    return out;
  }

private:
  Svr svr_;
  SolarMetrics metrics_;
  std::vector<SolarRecord> tail_;
};

// Per-interval renewable supply with its availability window. t_start/t_end
// bound the contiguous span that contains generation; outside it the panel
// is treated as dark.
struct RenewableForecast {
  std::vector<double> watts;
  int t_start = -1;  // first interval with meaningful output, -1 if none
  int t_end = -1;    // one past the last such interval

  bool any() const { return t_start >= 0; }
  bool in_window(int t) const { return any() && t >= t_start && t < t_end; }
  double at(int t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= watts.size())
      throw ConfigError("renewable series does not cover interval " + std::to_string(t));
    return watts[static_cast<std::size_t>(t)];
  }
};

// ghi -> panel output in W: rating is per 1 kW/m^2 standard irradiance,
// clipped at nameplate. The availability threshold is 1% of nameplate.
inline RenewableForecast renewable_from_hourly(std::span<const double> hourly_ghi,
                                               int intervals_per_hour, double panel_kw,
                                               double efficiency = 1.0) {
  if (hourly_ghi.empty()) throw EmptySeriesError("no hourly irradiance");
  if (intervals_per_hour <= 0) throw ConfigError("intervals per hour must be positive");
  if (panel_kw <= 0.0 || efficiency <= 0.0 || efficiency > 1.0)
    throw ConfigError("panel rating must be positive and efficiency in (0, 1]");
  RenewableForecast f;
  double cap_w = panel_kw * 1000.0 * efficiency;
  for (double ghi : hourly_ghi) {
    double w = std::min(cap_w, std::max(0.0, ghi) * panel_kw * efficiency);
    for (int k = 0; k < intervals_per_hour; ++k) f.watts.push_back(w);
  }
  double thr = 0.01 * panel_kw * 1000.0;
  for (std::size_t t = 0; t < f.watts.size(); ++t)
    if (f.watts[t] > thr) {
      if (f.t_start < 0) f.t_start = static_cast<int>(t);
      f.t_end = static_cast<int>(t) + 1;
    }
  return f;
}

// Weighted request-rate prediction over a recent window (oldest first).
// Weights halve from newest backwards and the oldest is doubled so they
// total one; a single sample predicts itself.
inline double predict_requests(std::span<const double> window) {
  if (window.empty()) throw EmptyWindowError("request prediction needs a non-empty window");
  double pred = 0.0;
  double w = 0.5;
  for (std::size_t k = 0; k < window.size(); ++k) {
    bool oldest = (k + 1 == window.size());
    double weight = window.size() == 1 ? 1.0 : (oldest ? w * 2.0 : w);
    pred += weight * window[window.size() - 1 - k];
    if (!oldest) w *= 0.5;
  }
  return pred;
}

}  // namespace greendc
