// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "gossipwatch/analyzer/analyzer.hpp"
#include "svg.hpp"

namespace gossipwatch::analyzer {

namespace {

std::string dec(double v) {
  return fmt::format("{:.6f}", v);
}

class Csv {
 public:
  void row(std::initializer_list<std::string> fields) {
    row(std::vector<std::string>(fields));
  }
  void row(const std::vector<std::string> &fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) {
        text_ += ',';
      }
      text_ += csv_field(fields[i]);
    }
    text_ += '\n';
  }
  const std::string &text() const { return text_; }

 private:
  std::string text_;
};

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string &name, const std::string &content) {
    auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw metrics::IoFailure("cannot open " + path.string() + " for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw metrics::IoFailure("write failed: " + path.string());
    }
    written_.push_back(path);
  }

  std::vector<std::filesystem::path> take() { return std::move(written_); }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

std::string per_peer_csv(const AnalysisReport &r) {
  Csv csv;
  std::vector<std::string> head = {"peer_id", "client_type", "client_family",
                                   "client_version", "country", "city", "latency_s",
                                   "connections", "disconnections",
                                   "connected_time_min"};
  head.insert(head.end(), r.topics.begin(), r.topics.end());
  head.emplace_back("total_messages");
  csv.row(head);
  for (const auto &p : r.per_peer) {
    std::vector<std::string> f = {p.peer_id,
                                  p.user_agent,
                                  metrics::to_string(p.client_family),
                                  p.client_version,
                                  p.country,
                                  p.city,
                                  p.latency.to_string(),
                                  std::to_string(p.connections),
                                  std::to_string(p.disconnections),
                                  format_minutes(p.connected_ms)};
    for (const auto &t : r.topics) {
      f.push_back(std::to_string(p.counts.at(t)));
    }
    f.push_back(std::to_string(p.total_messages));
    csv.row(f);
  }
  return csv.text();
}

std::string per_client_csv(const AnalysisReport &r) {
  Csv csv;
  std::vector<std::string> head = {"client_family", "peer_count", "avg_connections",
                                   "avg_disconnections", "avg_connected_time_min",
                                   "avg_latency_s"};
  for (const auto &t : r.topics) {
    head.push_back("total_" + t);
  }
  for (const auto &t : r.topics) {
    head.push_back("avg_" + t);
  }
  head.emplace_back("version_count");
  csv.row(head);
  for (const auto &c : r.per_client) {
    std::vector<std::string> f = {metrics::to_string(c.family),
                                  std::to_string(c.peer_count),
                                  dec(c.avg_connections),
                                  dec(c.avg_disconnections),
                                  dec(c.avg_connected_time_min),
                                  dec(c.avg_latency_s)};
    for (const auto &t : r.topics) {
      f.push_back(std::to_string(c.topic_totals.at(t)));
    }
    for (const auto &t : r.topics) {
      f.push_back(dec(c.topic_averages.at(t)));
    }
    f.push_back(std::to_string(c.version_count));
    csv.row(f);
  }
  return csv.text();
}

std::string versions_csv(const AnalysisReport &r) {
  Csv csv;
  std::vector<std::string> head;
  std::vector<std::string> row;
  for (std::size_t i = 0; i < metrics::kAllFamilies.size(); ++i) {
    head.emplace_back(metrics::to_string(metrics::kAllFamilies[i]));
    row.push_back(std::to_string(r.version_counts[i]));
  }
  csv.row(head);
  csv.row(row);
  return csv.text();
}

std::string per_country_csv(const AnalysisReport &r) {
  Csv csv;
  csv.row({"country", "peer_count"});
  for (const auto &c : r.per_country) {
    csv.row({c.country, std::to_string(c.peer_count)});
  }
  return csv.text();
}

std::string summary_csv(const AnalysisReport &r) {
  const auto &s = r.summary;
  Csv csv;
  csv.row({"metric", "value"});
  csv.row({"peers", std::to_string(s.peers)});
  csv.row({"peerstore_size",
           s.peerstore_size ? std::to_string(*s.peerstore_size) : std::string("unknown")});
  csv.row({"connected_count", std::to_string(s.connected_count)});
  for (const auto &t : s.top_k) {
    csv.row({fmt::format("top_{}_share_{}", t.k, t.topic), dec(t.share)});
  }
  csv.row({"outliers", std::to_string(s.outliers.size())});
  std::string supers;
  for (const auto &p : s.super_peers) {
    supers += supers.empty() ? p : ";" + p;
  }
  csv.row({"super_peers", supers});
  return csv.text();
}

std::string outliers_csv(const AnalysisReport &r) {
  Csv csv;
  csv.row({"peer_id", "flag"});
  for (const auto &o : r.summary.outliers) {
    csv.row({o.peer_id, to_string(o.flag)});
  }
  return csv.text();
}

template <typename Get>
std::vector<svg::Bar> peer_bars(const AnalysisReport &r, Get get) {
  std::vector<svg::Bar> bars;
  for (const auto &p : r.per_peer) {
    bars.push_back({p.peer_id.substr(0, 12), get(p)});
  }
  std::stable_sort(bars.begin(), bars.end(),
                   [](const auto &a, const auto &b) { return a.value > b.value; });
  return bars;
}

template <typename Get>
std::vector<svg::Bar> client_bars(const AnalysisReport &r, Get get) {
  std::vector<svg::Bar> bars;
  for (const auto &c : r.per_client) {
    bars.push_back({metrics::to_string(c.family), get(c)});
  }
  return bars;
}

}  // namespace

std::string csv_field(std::string_view value) {
  if (value.find(',') == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  out += '"';
  return out;
}

std::vector<std::filesystem::path> emit_report(const AnalysisReport &r,
                                               const std::filesystem::path &out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw metrics::IoFailure("cannot create " + out_dir.string() + ": " + ec.message());
  }
  Writer w(out_dir);
  w.write("per_peer.csv", per_peer_csv(r));
  w.write("per_client.csv", per_client_csv(r));
  w.write("client_versions.csv", versions_csv(r));
  w.write("per_country.csv", per_country_csv(r));
  w.write("summary.csv", summary_csv(r));
  w.write("outliers.csv", outliers_csv(r));

  std::vector<svg::Bar> countries;
  for (const auto &c : r.per_country) {
    countries.push_back({c.country, static_cast<double>(c.peer_count)});
  }
  w.write("peers_per_country.svg", svg::bar_chart("Peers per country", "peers", countries));
  w.write("peers_per_client.svg",
          svg::bar_chart("Peers per client", "peers", client_bars(r, [](const ClientRow &c) {
                           return static_cast<double>(c.peer_count);
                         })));
  w.write("connections_per_peer.svg",
          svg::bar_chart("Connections per peer", "connections",
                         peer_bars(r, [](const PeerDerived &p) {
                           return static_cast<double>(p.connections);
                         })));
  w.write("connected_time_per_peer.svg",
          svg::bar_chart("Connected time per peer", "minutes",
                         peer_bars(r, [](const PeerDerived &p) {
                           return p.connected_time_min();
                         })));
  w.write("latency_per_peer.svg",
          svg::bar_chart("Latency per peer", "seconds", peer_bars(r, [](const PeerDerived &p) {
                           return p.latency.seconds();
                         })));
  w.write("client_avg_connections.svg",
          svg::bar_chart("Average connections per client (mean)", "connections",
                         client_bars(r, [](const ClientRow &c) { return c.avg_connections; })));
  w.write("client_avg_disconnections.svg",
          svg::bar_chart("Average disconnections per client (mean)", "disconnections",
                         client_bars(r, [](const ClientRow &c) { return c.avg_disconnections; })));
  w.write("client_avg_connected_time.svg",
          svg::bar_chart("Average connected time per client (mean)", "minutes",
                         client_bars(r, [](const ClientRow &c) {
                           return c.avg_connected_time_min;
                         })));
  w.write("client_avg_latency.svg",
          svg::bar_chart("Average latency per client (mean)", "seconds",
                         client_bars(r, [](const ClientRow &c) { return c.avg_latency_s; })));
  for (const auto &t : r.topics) {
    w.write("client_total_" + t + ".svg",
            svg::bar_chart(t + " messages per client (total)", "messages",
                           client_bars(r, [&](const ClientRow &c) {
                             return static_cast<double>(c.topic_totals.at(t));
                           })));
    w.write("client_avg_" + t + ".svg",
            svg::bar_chart(t + " messages per client (mean)", "messages",
                           client_bars(r, [&](const ClientRow &c) {
                             return c.topic_averages.at(t);
                           })));
    w.write("messages_per_peer_" + t + ".svg",
            svg::bar_chart(t + " messages per peer", "messages",
                           peer_bars(r, [&](const PeerDerived &p) {
                             return static_cast<double>(p.counts.at(t));
                           })));
  }
  std::vector<std::pair<double, double>> points;
  for (const auto &p : r.per_peer) {
    points.emplace_back(p.connected_time_min(), static_cast<double>(p.total_messages));
  }
  w.write("messages_vs_connected_time.svg",
          svg::scatter_chart("Total messages vs connected time", "connected time (min)",
                             "messages", points));
  return w.take();
}

}  // namespace gossipwatch::analyzer
