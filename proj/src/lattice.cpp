#include "nngrams/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace nngrams {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

Lattice Lattice::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open lattice file: " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

Lattice Lattice::parse_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "LATTICE v1") {
    throw DataError("lattice file must start with 'LATTICE v1'");
  }
  int start_ext = -1, final_ext = -1;
  bool have_start = false, have_final = false;
  struct RawEdge {
    int from, to;
    std::string word;
    double score;
  };
  std::vector<RawEdge> raw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    if (tag == "START") {
      if (!(iss >> start_ext) || start_ext < 0) {
        throw DataError("bad START line: " + line);
      }
      have_start = true;
    } else if (tag == "FINAL") {
      if (!(iss >> final_ext) || final_ext < 0) {
        throw DataError("bad FINAL line: " + line);
      }
      have_final = true;
    } else if (tag == "E") {
      RawEdge e;
      if (!(iss >> e.from >> e.to >> e.word >> e.score) || e.from < 0 ||
          e.to < 0) {
        throw DataError("bad edge line: " + line);
      }
      raw.push_back(e);
    } else {
      throw DataError("unknown lattice line: " + line);
    }
  }
  if (!have_start) throw DataError("lattice missing START");
  if (!have_final) throw DataError("lattice missing FINAL");

  // Dense node ids.
  std::map<int, int> dense;
  auto intern = [&](int ext) {
    auto [it, fresh] = dense.emplace(ext, static_cast<int>(dense.size()));
    return it->second;
  };
  const int start = intern(start_ext);
  const int final = intern(final_ext);
  std::vector<std::pair<int, int>> endpoints;
  endpoints.reserve(raw.size());
  for (const auto& e : raw) {
    endpoints.emplace_back(intern(e.from), intern(e.to));
  }
  const int n = static_cast<int>(dense.size());

  // Keep only edges on some start->final path.
  std::vector<std::vector<int>> out(n), in_(n);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[static_cast<std::size_t>(endpoints[i].first)].push_back(static_cast<int>(i));
    in_[static_cast<std::size_t>(endpoints[i].second)].push_back(static_cast<int>(i));
  }
  auto reach = [&](int src, const std::vector<std::vector<int>>& adj,
                   bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{src};
    seen[static_cast<std::size_t>(src)] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int ei : adj[static_cast<std::size_t>(u)]) {
        int v = forward ? endpoints[static_cast<std::size_t>(ei)].second
                        : endpoints[static_cast<std::size_t>(ei)].first;
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    return seen;
  };
  const std::vector<char> fwd = reach(start, out, true);
  const std::vector<char> bwd = reach(final, in_, false);

  Lattice lat;
  lat.start_ = start;
  lat.final_ = final;
  std::vector<int> edge_map(raw.size(), -1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [u, v] = endpoints[i];
    if (fwd[static_cast<std::size_t>(u)] && bwd[static_cast<std::size_t>(u)] &&
        fwd[static_cast<std::size_t>(v)] && bwd[static_cast<std::size_t>(v)]) {
      LatticeEdge e;
      e.from = u;
      e.to = v;
      e.word = raw[i].word;
      e.log_score = raw[i].score;
      edge_map[i] = static_cast<int>(lat.edges_.size());
      lat.edges_.push_back(std::move(e));
    }
  }
  if (lat.edges_.empty()) {
    throw DataError("lattice has no start->final path");
  }
  lat.out_edges_.assign(static_cast<std::size_t>(n), {});
  lat.in_edges_.assign(static_cast<std::size_t>(n), {});
  for (std::size_t i = 0; i < lat.edges_.size(); ++i) {
    lat.out_edges_[static_cast<std::size_t>(lat.edges_[i].from)].push_back(
        static_cast<int>(i));
    lat.in_edges_[static_cast<std::size_t>(lat.edges_[i].to)].push_back(
        static_cast<int>(i));
  }

  // Kahn topological sort over live nodes; leftovers mean a cycle.
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  std::vector<char> live(static_cast<std::size_t>(n), 0);
  for (const auto& e : lat.edges_) {
    ++indeg[static_cast<std::size_t>(e.to)];
    live[static_cast<std::size_t>(e.from)] = 1;
    live[static_cast<std::size_t>(e.to)] = 1;
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int u = 0; u < n; ++u) {
    if (live[static_cast<std::size_t>(u)] && indeg[static_cast<std::size_t>(u)] == 0) {
      ready.push(u);
    }
  }
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    lat.topo_.push_back(u);
    for (int ei : lat.out_edges_[static_cast<std::size_t>(u)]) {
      if (--indeg[static_cast<std::size_t>(lat.edges_[static_cast<std::size_t>(ei)].to)] == 0) {
        ready.push(lat.edges_[static_cast<std::size_t>(ei)].to);
      }
    }
  }
  std::size_t live_count = 0;
  for (int u = 0; u < n; ++u) {
    live_count += live[static_cast<std::size_t>(u)] ? 1u : 0u;
  }
  if (lat.topo_.size() != live_count) {
    throw DataError("lattice contains a cycle");
  }
  return lat;
}

LatticePath Lattice::path_info(const std::vector<int>& edge_path) const {
  LatticePath p;
  for (int ei : edge_path) {
    const auto& e = edges_[static_cast<std::size_t>(ei)];
    p.words.push_back(e.word);
    p.log_score += e.log_score;
  }
  return p;
}

std::vector<int> Lattice::one_best() const {
  // Suffix DP from final; ties prefer the lexicographically smaller
  // word sequence of the remaining suffix.
  const std::size_t n = out_edges_.size();
  std::vector<double> best(n, kNegInf);
  std::vector<std::vector<std::string>> words(n);
  std::vector<int> choice(n, -1);
  best[static_cast<std::size_t>(final_)] = 0.0;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    const int u = *it;
    if (u == final_) continue;
    for (int ei : out_edges_[static_cast<std::size_t>(u)]) {
      const auto& e = edges_[static_cast<std::size_t>(ei)];
      if (best[static_cast<std::size_t>(e.to)] == kNegInf) continue;
      const double cand = e.log_score + best[static_cast<std::size_t>(e.to)];
      bool take = false;
      if (cand > best[static_cast<std::size_t>(u)]) {
        take = true;
      } else if (cand == best[static_cast<std::size_t>(u)] && choice[static_cast<std::size_t>(u)] >= 0) {
        std::vector<std::string> cand_words{e.word};
        cand_words.insert(cand_words.end(), words[static_cast<std::size_t>(e.to)].begin(),
                          words[static_cast<std::size_t>(e.to)].end());
        if (cand_words < words[static_cast<std::size_t>(u)]) {
          take = true;
        }
      }
      if (take) {
        best[static_cast<std::size_t>(u)] = cand;
        choice[static_cast<std::size_t>(u)] = ei;
        words[static_cast<std::size_t>(u)].assign(1, e.word);
        words[static_cast<std::size_t>(u)].insert(
            words[static_cast<std::size_t>(u)].end(),
            words[static_cast<std::size_t>(e.to)].begin(),
            words[static_cast<std::size_t>(e.to)].end());
      }
    }
  }
  if (best[static_cast<std::size_t>(start_)] == kNegInf) {
    throw DataError("lattice has no start->final path");
  }
  std::vector<int> path;
  for (int u = start_; u != final_;) {
    const int ei = choice[static_cast<std::size_t>(u)];
    path.push_back(ei);
    u = edges_[static_cast<std::size_t>(ei)].to;
  }
  return path;
}

std::vector<LatticePath> Lattice::n_best(std::size_t n) const {
  // A* enumeration: expand partial paths by optimistic bound
  // (prefix score + best suffix), emitting complete paths in
  // descending true score; duplicates by word sequence are dropped.
  const std::size_t nn = out_edges_.size();
  std::vector<double> suffix(nn, kNegInf);
  suffix[static_cast<std::size_t>(final_)] = 0.0;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    const int u = *it;
    for (int ei : out_edges_[static_cast<std::size_t>(u)]) {
      const auto& e = edges_[static_cast<std::size_t>(ei)];
      suffix[static_cast<std::size_t>(u)] =
          std::max(suffix[static_cast<std::size_t>(u)],
                   e.log_score + suffix[static_cast<std::size_t>(e.to)]);
    }
  }

  struct Partial {
    double bound;
    double score;
    int node;
    std::vector<std::string> words;
  };
  auto worse = [](const Partial& a, const Partial& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.words > b.words;  // smaller sequence pops first
  };
  std::priority_queue<Partial, std::vector<Partial>, decltype(worse)> pq(worse);
  pq.push({suffix[static_cast<std::size_t>(start_)], 0.0, start_, {}});

  std::set<std::vector<std::string>> emitted;
  std::vector<LatticePath> out;
  while (!pq.empty() && out.size() < n) {
    Partial p = pq.top();
    pq.pop();
    if (p.node == final_) {
      if (emitted.insert(p.words).second) {
        out.push_back({p.words, p.score});
      }
      continue;
    }
    for (int ei : out_edges_[static_cast<std::size_t>(p.node)]) {
      const auto& e = edges_[static_cast<std::size_t>(ei)];
      Partial q;
      q.score = p.score + e.log_score;
      q.bound = q.score + suffix[static_cast<std::size_t>(e.to)];
      q.node = e.to;
      q.words = p.words;
      q.words.push_back(e.word);
      pq.push(std::move(q));
    }
  }
  return out;
}

void Lattice::log_forward_backward(std::vector<double>* alpha,
                                   std::vector<double>* beta) const {
  const std::size_t n = out_edges_.size();
  alpha->assign(n, kNegInf);
  beta->assign(n, kNegInf);
  (*alpha)[static_cast<std::size_t>(start_)] = 0.0;
  (*beta)[static_cast<std::size_t>(final_)] = 0.0;
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    const int u = *it;
    if (u == final_) continue;
    double acc = kNegInf;
    for (int ei : out_edges_[static_cast<std::size_t>(u)]) {
      const auto& e = edges_[static_cast<std::size_t>(ei)];
      acc = log_add(acc, e.log_score + (*beta)[static_cast<std::size_t>(e.to)]);
    }
    (*beta)[static_cast<std::size_t>(u)] = acc;
  }
  for (int u : topo_) {
    if (u == start_) continue;
    double acc = kNegInf;
    for (int ei : in_edges_[static_cast<std::size_t>(u)]) {
      const auto& e = edges_[static_cast<std::size_t>(ei)];
      acc = log_add(acc, (*alpha)[static_cast<std::size_t>(e.from)] + e.log_score);
    }
    (*alpha)[static_cast<std::size_t>(u)] = acc;
  }
}

std::vector<double> Lattice::edge_posteriors() const {
  std::vector<double> alpha, beta;
  log_forward_backward(&alpha, &beta);
  const double log_z = alpha[static_cast<std::size_t>(final_)];
  std::vector<double> post(edges_.size(), 0.0);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    post[i] = std::exp(alpha[static_cast<std::size_t>(e.from)] + e.log_score +
                       beta[static_cast<std::size_t>(e.to)] - log_z);
  }
  return post;
}

PinchedAlignment pinch(const Lattice& lattice, const std::vector<int>& best) {
  // Validate the path.
  int at = lattice.start_;
  for (int ei : best) {
    if (ei < 0 || ei >= static_cast<int>(lattice.edges_.size()) ||
        lattice.edges_[static_cast<std::size_t>(ei)].from != at) {
      throw ValidationError("best is not a path of the lattice");
    }
    at = lattice.edges_[static_cast<std::size_t>(ei)].to;
  }
  if (at != lattice.final_) {
    throw ValidationError("best path does not reach the final node");
  }

  const std::size_t n = lattice.out_edges_.size();
  // Path counts; a node on every path satisfies fwd*bwd == total.
  std::vector<std::uint64_t> fwd(n, 0), bwd(n, 0);
  fwd[static_cast<std::size_t>(lattice.start_)] = 1;
  for (int u : lattice.topo_) {
    for (int ei : lattice.out_edges_[static_cast<std::size_t>(u)]) {
      fwd[static_cast<std::size_t>(lattice.edges_[static_cast<std::size_t>(ei)].to)] +=
          fwd[static_cast<std::size_t>(u)];
    }
  }
  bwd[static_cast<std::size_t>(lattice.final_)] = 1;
  for (auto it = lattice.topo_.rbegin(); it != lattice.topo_.rend(); ++it) {
    for (int ei : lattice.out_edges_[static_cast<std::size_t>(*it)]) {
      bwd[static_cast<std::size_t>(*it)] +=
          bwd[static_cast<std::size_t>(lattice.edges_[static_cast<std::size_t>(ei)].to)];
    }
  }
  const std::uint64_t total = fwd[static_cast<std::size_t>(lattice.final_)];

  std::vector<double> alpha, beta;
  lattice.log_forward_backward(&alpha, &beta);
  const double log_z = alpha[static_cast<std::size_t>(lattice.final_)];

  // Split the best path at cut nodes.
  struct Segment {
    int from, to;
    std::vector<std::string> span;  // 1-best words covered
  };
  std::vector<Segment> segments;
  Segment cur;
  cur.from = lattice.start_;
  at = lattice.start_;
  for (int ei : best) {
    const auto& e = lattice.edges_[static_cast<std::size_t>(ei)];
    cur.span.push_back(e.word);
    at = e.to;
    if (fwd[static_cast<std::size_t>(at)] * bwd[static_cast<std::size_t>(at)] == total) {
      cur.to = at;
      segments.push_back(std::move(cur));
      cur = Segment{};
      cur.from = at;
    }
  }

  PinchedAlignment result;
  for (const auto& seg : segments) {
    // All word sequences from seg.from to seg.to with their mass.
    std::map<std::vector<std::string>, double> mass;
    struct Frame {
      int node;
      double score;
      std::vector<std::string> words;
    };
    std::vector<Frame> stack{{seg.from, 0.0, {}}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (f.node == seg.to) {
        mass[f.words] += std::exp(alpha[static_cast<std::size_t>(seg.from)] + f.score +
                                  beta[static_cast<std::size_t>(seg.to)] - log_z);
        continue;
      }
      for (int ei : lattice.out_edges_[static_cast<std::size_t>(f.node)]) {
        const auto& e = lattice.edges_[static_cast<std::size_t>(ei)];
        // Only stay inside the segment: nodes strictly between cuts are
        // not cut nodes, so any path leaving seg.from reaches seg.to
        // before any later cut; a guard keeps malformed loops out.
        Frame g;
        g.node = e.to;
        g.score = f.score + e.log_score;
        g.words = f.words;
        g.words.push_back(e.word);
        if (g.node == seg.to || fwd[static_cast<std::size_t>(g.node)] *
                                        bwd[static_cast<std::size_t>(g.node)] !=
                                    total) {
          stack.push_back(std::move(g));
        }
      }
    }

    if (seg.span.size() > 1) {
      for (const auto& w : seg.span) {
        PinchPosition pos;
        pos.word = w;
        pos.excluded = ExcludeReason::kMultiwordAlignment;
        result.positions.push_back(std::move(pos));
      }
      continue;
    }

    PinchPosition pos;
    pos.word = seg.span.front();
    bool multiword_alt = false;
    for (const auto& [words, p] : mass) {
      if (words == seg.span) {
        pos.best_posterior = p;
      } else {
        if (words.size() > 1) multiword_alt = true;
        pos.confusions.emplace_back(words, p);
      }
    }
    if (pos.confusions.empty()) {
      pos.excluded = ExcludeReason::kNoConfusions;
    } else if (multiword_alt) {
      pos.excluded = ExcludeReason::kMultiwordAlignment;
      pos.confusions.clear();
    }
    result.positions.push_back(std::move(pos));
  }
  return result;
}

}  // namespace nngrams
