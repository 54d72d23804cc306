#ifndef NNGRAMS_LATTICE_HPP
#define NNGRAMS_LATTICE_HPP

#include <string>
#include <vector>

#include "nngrams/common.hpp"

namespace nngrams {

struct LatticeEdge {
  int from = 0;
  int to = 0;
  std::string word;
  double log_score = 0.0;  // natural log
};

// One complete start->final hypothesis.
struct LatticePath {
  std::vector<std::string> words;
  double log_score = 0.0;
};

struct PinchedAlignment;
class Lattice;
PinchedAlignment pinch(const Lattice& lattice, const std::vector<int>& best);

// Directed acyclic word graph with scored edges. Parsing prunes edges not
// on any start->final path and fixes a topological order; instances are
// immutable afterwards and all operations are pure.
class Lattice {
 public:
  // Text format: `LATTICE v1`, `START <node>`, `FINAL <node>`, then
  // `E <from> <to> <word> <log_score>` lines. Throws DataError on cycles,
  // missing header fields, or when no start->final path survives pruning.
  static Lattice parse_file(const std::string& path);
  static Lattice parse_text(const std::string& text);

  int start() const { return start_; }
  int final_node() const { return final_; }
  const std::vector<LatticeEdge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return topo_.size(); }

  // Highest-scoring path; score ties prefer the lexicographically smaller
  // word sequence. Edge indices into edges().
  std::vector<int> one_best() const;

  // Top-n distinct word sequences by total score, descending; sequences
  // reachable via several paths keep their best-scoring instance. Returns
  // fewer when the lattice has fewer distinct sequences.
  std::vector<LatticePath> n_best(std::size_t n) const;

  // Forward-backward in log space; posterior per edge index. Posteriors
  // across any topological cut sum to 1.
  std::vector<double> edge_posteriors() const;

  LatticePath path_info(const std::vector<int>& edge_path) const;

  // All nodes in topological order (internal dense ids 0..num_nodes-1).
  const std::vector<int>& topo_order() const { return topo_; }

  friend PinchedAlignment pinch(const Lattice& lattice,
                                const std::vector<int>& best);

 private:
  int start_ = -1;
  int final_ = -1;
  std::vector<LatticeEdge> edges_;            // endpoints are dense ids
  std::vector<std::vector<int>> out_edges_;   // per dense node id
  std::vector<std::vector<int>> in_edges_;
  std::vector<int> topo_;                     // dense ids in topo order

  void log_forward_backward(std::vector<double>* alpha,
                            std::vector<double>* beta) const;
};

enum class ExcludeReason { kNone, kNoConfusions, kMultiwordAlignment };

// One 1-best word with its competing hypotheses from the pinched lattice.
struct PinchPosition {
  std::string word;
  double best_posterior = 0.0;  // segment mass of the 1-best word sequence
  // Alternative word sequences with their segment posteriors; cleared for
  // excluded positions.
  std::vector<std::pair<std::vector<std::string>, double>> confusions;
  ExcludeReason excluded = ExcludeReason::kNone;
};

// Aligns every path against the 1-best using cut nodes (nodes on every
// start->final path, detected by forward x backward path counts). Each
// inter-cut segment covering a single 1-best word yields that word's
// confusion set; a segment is excluded when the 1-best word has no
// alternatives (no_confusions) or when the alignment crosses word
// boundaries (multiword_alignment): the segment spans several 1-best words
// or an alternative is a multi-word sequence.
struct PinchedAlignment {
  std::vector<PinchPosition> positions;  // one per 1-best word
};

}  // namespace nngrams

#endif
