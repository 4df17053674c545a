#include "egoalign/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace egoalign {

namespace {

std::vector<std::vector<double>> parse_csv(const std::string& text, size_t* header_lines) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!header_seen) {
      header_seen = true;  // header row required by the format
      continue;
    }
    std::vector<double> row;
    const char* p = line.c_str();
    while (*p) {
      char* endp = nullptr;
      double v = std::strtod(p, &endp);
      if (endp == p) throw MalformedRow(lineno, "unparsable field");
      row.push_back(v);
      p = endp;
      while (*p == ' ') ++p;
      if (*p == ',') ++p;
      else if (*p != '\0' && *p != '\r') throw MalformedRow(lineno, "unexpected character");
      else break;
    }
    rows.push_back(std::move(row));
  }
  if (header_lines) *header_lines = lineno;
  return rows;
}

void check_increasing(const std::vector<std::vector<double>>& rows) {
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][0] <= rows[i - 1][0]) {
      throw MalformedRow(i + 2, "non-increasing timestamp");
    }
  }
}

// Nearest-timestamp join: for each t in a, index into b within tol, else -1.
std::vector<long> join_by_time(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b,
                               double tol) {
  std::vector<long> idx(a.size(), -1);
  size_t j = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double t = a[i][0];
    while (j + 1 < b.size() && std::abs(b[j + 1][0] - t) <= std::abs(b[j][0] - t)) ++j;
    if (j < b.size() && std::abs(b[j][0] - t) <= tol) idx[i] = static_cast<long>(j);
  }
  return idx;
}

struct RawRow {
  double t;
  Eigen::VectorXd cols;  // concatenation of all series columns for this row
};

// Split joined rows on time gaps and emit episodes; `dims` gives each
// series' (kind, width) in the column order used by `cols`.
std::vector<Episode> split_rows(std::vector<RawRow>& rows, double gap_threshold,
                                Embodiment emb, double rate, int arms,
                                const std::vector<std::pair<SeriesKind, int>>& dims,
                                const std::string& source_id) {
  std::vector<Episode> out;
  size_t begin = 0;
  auto flush = [&](size_t b, size_t e) {
    if (e - b < 2) return;  // single-sample fragments carry no trajectory
    Episode ep;
    ep.embodiment = emb;
    ep.arms = arms;
    ep.source_id = source_id + (out.empty() ? "" : "#" + std::to_string(out.size()));
    double t0 = rows[b].t;
    int col = 0;
    for (auto [kind, d] : dims) {
      TimedSeries s;
      s.kind = kind;
      s.nominal_rate = rate;
      s.timestamps.reserve(e - b);
      s.values.resize(static_cast<long>(e - b), d);
      for (size_t i = b; i < e; ++i) {
        s.timestamps.push_back(rows[i].t - t0);
        s.values.row(static_cast<long>(i - b)) = rows[i].cols.segment(col, d).transpose();
      }
      ep.series.push_back(std::move(s));
      col += d;
    }
    out.push_back(std::move(ep));
  };
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].t - rows[i - 1].t > gap_threshold) {
      flush(begin, i);
      begin = i;
    }
  }
  flush(begin, rows.size());
  return out;
}

std::string fmt_row(const double* v, int n) {
  std::string s;
  char buf[32];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) s += ',';
    s += buf;
  }
  return s;
}

}  // namespace

Eigen::VectorXd TimedSeries::sample(double t) const {
  const auto& ts = timestamps;
  if (t <= ts.front()) return values.row(0).transpose();
  if (t >= ts.back()) return values.row(values.rows() - 1).transpose();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  size_t hi = static_cast<size_t>(it - ts.begin());
  size_t lo = hi - 1;
  double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return ((1.0 - w) * values.row(static_cast<long>(lo)) +
          w * values.row(static_cast<long>(hi)))
      .transpose();
}

Pose3 TimedSeries::pose_at(size_t row, int arm) const {
  Eigen::VectorXd v = values.row(static_cast<long>(row)).segment(arm * 12, 12).transpose();
  Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
  return Pose3::from_drifted(r, v.tail<3>());
}

Pose3 TimedSeries::sample_pose(double t, int arm) const {
  Eigen::VectorXd v = sample(t).segment(arm * 12, 12);
  Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
  return Pose3::from_drifted(r, v.tail<3>());
}

const TimedSeries* Episode::find(SeriesKind k) const {
  for (const auto& s : series)
    if (s.kind == k) return &s;
  return nullptr;
}

const TimedSeries& Episode::require(SeriesKind k) const {
  const TimedSeries* s = find(k);
  if (!s) throw IngestError("episode missing required series");
  return *s;
}

double Episode::start() const {
  double t = series.front().start();
  for (const auto& s : series) t = std::max(t, s.start());
  return t;
}

double Episode::end() const {
  double t = series.front().end();
  for (const auto& s : series) t = std::min(t, s.end());
  return t;
}

double Episode::nominal_rate() const { return series.front().nominal_rate; }

std::vector<Episode> parse_human_log(const std::string& device_pose_csv,
                                     const std::string& hand_pos_csv,
                                     const std::string& source_id,
                                     const std::string& scene_csv) {
  auto dev = parse_csv(device_pose_csv, nullptr);
  auto hand = parse_csv(hand_pos_csv, nullptr);
  check_increasing(dev);
  check_increasing(hand);
  for (size_t i = 0; i < dev.size(); ++i)
    if (dev[i].size() != 13) throw MalformedRow(i + 2, "device-pose row needs 13 columns");
  for (size_t i = 0; i < hand.size(); ++i)
    if (hand[i].size() != 9) throw MalformedRow(i + 2, "hand-position row needs 9 columns");
  if (dev.empty() || hand.empty()) throw IngestError("empty log");

  auto join = join_by_time(dev, hand, kClockJoinTol);
  size_t matched = 0;
  for (long j : join) matched += (j >= 0);
  if (matched * 2 < dev.size()) {
    throw ClockMismatch("device and hand CSVs share < 50% of timestamps within 1 ms");
  }

  bool use_l = false, use_r = false;
  for (size_t i = 0; i < dev.size(); ++i) {
    if (join[i] < 0) continue;
    use_l = use_l || hand[static_cast<size_t>(join[i])][7] != 0.0;
    use_r = use_r || hand[static_cast<size_t>(join[i])][8] != 0.0;
  }
  int arms = (use_l ? 1 : 0) + (use_r ? 1 : 0);
  if (arms == 0) throw IngestError("no valid hand detections in log");

  std::vector<long> scene_join;
  std::vector<std::vector<double>> scene;
  if (!scene_csv.empty()) {
    scene = parse_csv(scene_csv, nullptr);
    check_increasing(scene);
    for (size_t i = 0; i < scene.size(); ++i)
      if (scene[i].size() != 8) throw MalformedRow(i + 2, "scene row needs 8 columns");
    scene_join = join_by_time(dev, scene, kClockJoinTol);
  }

  std::vector<RawRow> rows;
  for (size_t i = 0; i < dev.size(); ++i) {
    if (join[i] < 0) continue;
    const auto& h = hand[static_cast<size_t>(join[i])];
    if (use_l && h[7] == 0.0) continue;  // missing detection: drop, never impute
    if (use_r && h[8] == 0.0) continue;
    if (!scene.empty() && scene_join[i] < 0) continue;
    RawRow r;
    r.t = dev[i][0];
    int d = 12 + 3 * arms + (scene.empty() ? 0 : 7);
    r.cols.resize(d);
    for (int c = 0; c < 12; ++c) r.cols[c] = dev[i][1 + c];
    int k = 12;
    if (use_l)
      for (int c = 0; c < 3; ++c) r.cols[k++] = h[1 + c];
    if (use_r)
      for (int c = 0; c < 3; ++c) r.cols[k++] = h[4 + c];
    if (!scene.empty()) {
      const auto& sc = scene[static_cast<size_t>(scene_join[i])];
      for (int c = 0; c < 7; ++c) r.cols[k++] = sc[1 + c];
    }
    rows.push_back(std::move(r));
  }

  std::vector<std::pair<SeriesKind, int>> dims = {
      {SeriesKind::DevicePoseWorld, 12}, {SeriesKind::HandPosDevice, 3 * arms}};
  if (!scene.empty()) dims.push_back({SeriesKind::Scene, 7});
  return split_rows(rows, kHumanGapSplit, Embodiment::Human, kHumanRate, arms, dims,
                    source_id);
}

std::vector<Episode> parse_robot_log(const std::string& log_csv,
                                     const std::string& source_id,
                                     const std::string& scene_csv) {
  auto raw = parse_csv(log_csv, nullptr);
  check_increasing(raw);
  if (raw.empty()) throw IngestError("empty log");
  size_t w = raw[0].size();
  if ((w - 1) % 26 != 0 || (w - 1) / 26 < 1 || (w - 1) / 26 > 2) {
    throw ArityMismatch("robot row width " + std::to_string(w) +
                        " does not match 1 + 26 per arm (7 joints per arm)");
  }
  int arms = static_cast<int>((w - 1) / 26);
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() != w)
      throw ArityMismatch("row " + std::to_string(i + 2) + " width differs from header row");
  }

  std::vector<long> scene_join;
  std::vector<std::vector<double>> scene;
  if (!scene_csv.empty()) {
    scene = parse_csv(scene_csv, nullptr);
    check_increasing(scene);
    scene_join = join_by_time(raw, scene, kClockJoinTol);
  }

  std::vector<RawRow> rows;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!scene.empty() && scene_join[i] < 0) continue;
    RawRow r;
    r.t = raw[i][0];
    int d = 26 * arms + (scene.empty() ? 0 : 7);
    r.cols.resize(d);
    // reorder per-arm blocks into [eef x arms][q x arms][a x arms]
    for (int a = 0; a < arms; ++a) {
      for (int c = 0; c < 12; ++c) r.cols[a * 12 + c] = raw[i][1 + a * 26 + c];
      for (int c = 0; c < 7; ++c) r.cols[12 * arms + a * 7 + c] = raw[i][1 + a * 26 + 12 + c];
      for (int c = 0; c < 7; ++c)
        r.cols[19 * arms + a * 7 + c] = raw[i][1 + a * 26 + 19 + c];
    }
    if (!scene.empty()) {
      const auto& sc = scene[static_cast<size_t>(scene_join[i])];
      for (int c = 0; c < 7; ++c) r.cols[26 * arms + c] = sc[1 + c];
    }
    rows.push_back(std::move(r));
  }

  std::vector<std::pair<SeriesKind, int>> dims = {{SeriesKind::EefPoseBase, 12 * arms},
                                                  {SeriesKind::JointPos, 7 * arms},
                                                  {SeriesKind::JointAction, 7 * arms}};
  if (!scene.empty()) dims.push_back({SeriesKind::Scene, 7});
  return split_rows(rows, 3.0 / kRobotRate, Embodiment::Robot, kRobotRate, arms, dims,
                    source_id);
}

Episode time_align(const Episode& ep) {
  double t0 = ep.start();
  double t1 = ep.end();
  if (t1 - t0 < 1.0) throw InsufficientOverlap("series overlap < 1 s");
  double rate = ep.nominal_rate();
  long n = static_cast<long>(std::floor((t1 - t0) * rate + 1e-9)) + 1;

  Episode out;
  out.embodiment = ep.embodiment;
  out.arms = ep.arms;
  out.source_id = ep.source_id;
  for (const auto& s : ep.series) {
    TimedSeries g;
    g.kind = s.kind;
    g.nominal_rate = rate;
    g.timestamps.reserve(static_cast<size_t>(n));
    g.values.resize(n, s.values.cols());
    bool is_pose = (s.kind == SeriesKind::DevicePoseWorld || s.kind == SeriesKind::EefPoseBase);
    int blocks = is_pose ? static_cast<int>(s.values.cols()) / 12 : 0;
    for (long i = 0; i < n; ++i) {
      double t = t0 + static_cast<double>(i) / rate;
      g.timestamps.push_back(static_cast<double>(i) / rate);
      Eigen::VectorXd v = s.sample(t);
      if (is_pose) {
        for (int b = 0; b < blocks; ++b) {
          Eigen::Matrix3d r =
              Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data() + b * 12);
          if (rotation_drift(r) > 1e-12) {
            Eigen::Matrix3d rr = closest_rotation(r);
            Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data() + b * 12) = rr;
          }
        }
      }
      if (s.kind == SeriesKind::Scene) {
        v[6] = std::round(v[6]);  // held flag stays binary through interpolation
      }
      g.values.row(i) = v.transpose();
    }
    out.series.push_back(std::move(g));
  }
  return out;
}

std::string write_device_pose_csv(const TimedSeries& s) {
  std::string out = "t_s,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";
  Eigen::VectorXd row(13);
  for (long i = 0; i < s.values.rows(); ++i) {
    row[0] = s.timestamps[static_cast<size_t>(i)];
    row.tail(12) = s.values.row(i).transpose();
    out += fmt_row(row.data(), 13);
    out += '\n';
  }
  return out;
}

std::string write_hand_pos_csv(const TimedSeries& s, int arms) {
  std::string out = "t_s,lx,ly,lz,rx,ry,rz,valid_l,valid_r\n";
  Eigen::VectorXd row(9);
  for (long i = 0; i < s.values.rows(); ++i) {
    row.setZero();
    row[0] = s.timestamps[static_cast<size_t>(i)];
    row.segment(1, 3) = s.values.row(i).head(3).transpose();
    row[7] = 1.0;
    if (arms == 2) {
      row.segment(4, 3) = s.values.row(i).segment(3, 3).transpose();
      row[8] = 1.0;
    }
    out += fmt_row(row.data(), 9);
    out += '\n';
  }
  return out;
}

std::string write_robot_log_csv(const Episode& ep) {
  const auto& eef = ep.require(SeriesKind::EefPoseBase);
  const auto& q = ep.require(SeriesKind::JointPos);
  const auto& a = ep.require(SeriesKind::JointAction);
  int arms = ep.arms;
  std::string out = "t_s";
  for (int arm = 0; arm < arms; ++arm) {
    const char* names[] = {"r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
                           "tx",  "ty",  "tz"};
    std::string sfx = arms == 2 ? std::string("_") + std::to_string(arm) : "";
    for (const char* nm : names) out += "," + std::string(nm) + sfx;
    for (int j = 1; j <= 7; ++j) out += ",q" + std::to_string(j) + sfx;
    for (int j = 1; j <= 7; ++j) out += ",a" + std::to_string(j) + sfx;
  }
  out += '\n';
  Eigen::VectorXd row(1 + 26 * arms);
  for (long i = 0; i < eef.values.rows(); ++i) {
    row[0] = eef.timestamps[static_cast<size_t>(i)];
    for (int arm = 0; arm < arms; ++arm) {
      row.segment(1 + arm * 26, 12) = eef.values.row(i).segment(arm * 12, 12).transpose();
      row.segment(1 + arm * 26 + 12, 7) = q.values.row(i).segment(arm * 7, 7).transpose();
      row.segment(1 + arm * 26 + 19, 7) = a.values.row(i).segment(arm * 7, 7).transpose();
    }
    out += fmt_row(row.data(), static_cast<int>(row.size()));
    out += '\n';
  }
  return out;
}

std::string write_scene_csv(const TimedSeries& s) {
  std::string out = "t_s,ox,oy,oz,bx,by,bz,held\n";
  Eigen::VectorXd row(8);
  for (long i = 0; i < s.values.rows(); ++i) {
    row[0] = s.timestamps[static_cast<size_t>(i)];
    row.tail(7) = s.values.row(i).transpose();
    out += fmt_row(row.data(), 8);
    out += '\n';
  }
  return out;
}

}  // namespace egoalign
