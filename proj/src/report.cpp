#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "vpbox/error.hpp"
#include "vpbox/pipeline.hpp"

namespace vpbox {

namespace fs = std::filesystem;

namespace {

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

Json to_json(const VideoMetrics& m) {
  Json j;
  j["mean_abs_err"] = m.mean_abs_err;
  j["median_abs_err"] = m.median_abs_err;
  j["p95_abs_err"] = m.p95_abs_err;
  j["recall"] = m.recall;
  j["precision"] = m.precision;
  j["matched"] = m.matched;
  j["n_gt"] = m.n_gt;
  j["n_measured"] = m.n_measured;
  return j;
}

Json to_json(const Report& r) {
  Json j;
  j["video"] = r.video;
  j["fps"] = r.fps;
  Json tracks = Json::array();
  for (const auto& t : r.tracks) {
    Json jt;
    jt["id"] = t.id;
    jt["speed_kmh"] = t.speed_kmh;
    jt["crossing_time_s"] = optional_json(t.crossing_time_s);
    jt["lane"] = optional_json(t.lane);
    jt["detections"] = t.detections;
    jt["valid_pairs"] = t.valid_pairs;
    tracks.push_back(jt);
  }
  j["tracks"] = tracks;
  Json view;
  view["pair"] = std::string(to_string(r.pair));
  view["coverage"] = r.coverage;
  view["crop_rows"] = r.crop_rows;
  j["view"] = view;
  const PipelineCounts& c = r.counts;
  j["counts"] = {{"frames", c.frames},
                 {"detections", c.detections},
                 {"invalid_geometry", c.invalid_geometry},
                 {"edge_boxes_removed", c.edge_boxes_removed},
                 {"dropped_short", c.dropped_short},
                 {"dropped_static", c.dropped_static},
                 {"dropped_unmeasurable", c.dropped_unmeasurable}};
  if (r.evaluation) {
    j["metrics"] = to_json(r.evaluation->metrics);
    Json pairs = Json::array();
    for (const auto& p : r.evaluation->pairs) {
      pairs.push_back({{"track", p.measured_id},
                       {"vehicle", p.gt_id},
                       {"speed_kmh", p.measured_kmh},
                       {"gt_speed_kmh", p.gt_kmh}});
    }
    j["matches"] = pairs;
  }
  return j;
}

std::string report_csv(const Report& r) {
  std::string out = "video,id,speed_kmh,crossing_time_s,lane\n";
  for (const auto& t : r.tracks) {
    out += r.video + "," + std::to_string(t.id) + "," + fmt(t.speed_kmh) + "," +
           (t.crossing_time_s ? fmt(*t.crossing_time_s) : "") + "," +
           (t.lane ? std::to_string(*t.lane) : "") + "\n";
  }
  return out;
}

std::optional<VideoMetrics> aggregate_reports(const std::vector<Report>& reports) {
  std::vector<VideoMetrics> m;
  for (const auto& r : reports) {
    if (r.evaluation) m.push_back(r.evaluation->metrics);
  }
  if (m.empty()) return std::nullopt;
  return aggregate(m);
}

namespace {

std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + fmt(x, 6) + "\" y=\"" + fmt(y, 6) + "\" text-anchor=\"" + anchor + "\">" + s +
         "</text>\n";
}

std::string rect(double x, double y, double w, double h, const char* fill) {
  return "<rect x=\"" + fmt(x, 6) + "\" y=\"" + fmt(y, 6) + "\" width=\"" + fmt(w, 6) +
         "\" height=\"" + fmt(h, 6) + "\" fill=\"" + fill + "\"/>\n";
}

// Histogram of signed speed errors, 0.5 km/h bins.
std::string error_histogram(const std::vector<Report>& reports) {
  std::vector<double> err;
  for (const auto& r : reports) {
    if (!r.evaluation) continue;
    for (const auto& p : r.evaluation->pairs) err.push_back(p.measured_kmh - p.gt_kmh);
  }
  const int W = 640, H = 360, left = 50, bottom = 40, top = 30;
  std::string s = svg_open(W, H) + text(W / 2.0, 18, "Speed error (measured - ground truth)");
  if (err.empty()) return s + text(W / 2.0, H / 2.0, "no matched vehicles") + "</svg>\n";

  const double bin = 0.5;
  const double lo = std::floor(*std::min_element(err.begin(), err.end()) / bin) * bin;
  const double hi = std::max(lo + bin, std::ceil(*std::max_element(err.begin(), err.end()) / bin) * bin);
  const int nbins = std::max(1, static_cast<int>(std::lround((hi - lo) / bin)));
  std::vector<int> counts(nbins, 0);
  for (double e : err) counts[std::clamp(static_cast<int>((e - lo) / bin), 0, nbins - 1)]++;
  const int peak = *std::max_element(counts.begin(), counts.end());
  const double pw = W - left - 20.0, ph = H - top - bottom;
  for (int i = 0; i < nbins; ++i) {
    const double bh = ph * counts[i] / peak;
    s += rect(left + pw * i / nbins, top + ph - bh, pw / nbins - 1.0, bh, "#4878a8");
  }
  s += text(left, H - bottom + 16, fmt(lo, 4)) + text(left + pw, H - bottom + 16, fmt(hi, 4));
  s += text(left + pw / 2, H - 8, "km/h") + text(left - 8, top + 10, std::to_string(peak), "end");
  return s + "</svg>\n";
}

// Mean / median / p95 absolute error per video.
std::string video_bars(const std::vector<Report>& reports) {
  std::vector<const Report*> rs;
  for (const auto& r : reports) {
    if (r.evaluation) rs.push_back(&r);
  }
  const int W = std::max(320, 80 + 90 * static_cast<int>(rs.size())), H = 360, left = 50, bottom = 50,
            top = 40;
  std::string s = svg_open(W, H) + text(W / 2.0, 18, "Absolute speed error per video (mean, median, p95)");
  if (rs.empty()) return s + text(W / 2.0, H / 2.0, "no evaluated videos") + "</svg>\n";
  double peak = 0.0;
  for (const auto* r : rs) peak = std::max(peak, r->evaluation->metrics.p95_abs_err);
  if (!(peak > 0.0)) peak = 1.0;
  const double ph = H - top - bottom;
  const char* colors[3] = {"#4878a8", "#72b06a", "#d08040"};
  for (size_t i = 0; i < rs.size(); ++i) {
    const auto& m = rs[i]->evaluation->metrics;
    const double vals[3] = {m.mean_abs_err, m.median_abs_err, m.p95_abs_err};
    const double x0 = left + 10 + 90.0 * i;
    for (int k = 0; k < 3; ++k) {
      const double bh = ph * vals[k] / peak;
      s += rect(x0 + 24.0 * k, top + ph - bh, 22.0, bh, colors[k]);
    }
    s += text(x0 + 35, H - bottom + 16, rs[i]->video.empty() ? std::to_string(i) : rs[i]->video);
  }
  s += text(left - 8, top + 10, fmt(peak, 4) + " km/h", "end");
  return s + "</svg>\n";
}

}  // namespace

void emit_report(const std::vector<Report>& reports, const fs::path& stem, bool csv, bool plots) {
  const fs::path base = stem.parent_path() / stem.stem();
  Json j;
  if (reports.size() == 1) {
    j = to_json(reports[0]);
  } else {
    Json videos = Json::array();
    for (const auto& r : reports) videos.push_back(to_json(r));
    j["videos"] = videos;
    const auto agg = aggregate_reports(reports);
    j["aggregate"] = agg ? to_json(*agg) : Json(nullptr);
  }
  write_text(base.string() + ".json", j.dump(2) + "\n");
  if (csv) {
    std::string out = "video,id,speed_kmh,crossing_time_s,lane\n";
    for (const auto& r : reports) {
      const std::string body = report_csv(r);
      out += body.substr(body.find('\n') + 1);
    }
    write_text(base.string() + ".csv", out);
  }
  if (plots) {
    write_text(base.string() + "_errors.svg", error_histogram(reports));
    write_text(base.string() + "_videos.svg", video_bars(reports));
  }
}

}  // namespace vpbox
