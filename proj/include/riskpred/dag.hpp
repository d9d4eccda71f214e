#ifndef RISKPRED_DAG_HPP
#define RISKPRED_DAG_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace riskpred::causal {

// Directed acyclic graph over named nodes (observed or latent) with a
// designated treatment/outcome pair. Latent nodes participate in
// d-separation but cannot be adjusted for.
class Dag {
 public:
  // Adding an existing node is a no-op (latent flag must agree).
  void add_node(const std::string& name, bool latent = false);
  void add_edge(const std::string& from, const std::string& to);
  void set_treatment(const std::string& name);
  void set_outcome(const std::string& name);

  // Throws if cyclic, treatment/outcome missing or equal, or an edge
  // endpoint is undeclared.
  void validate() const;

  bool has_node(const std::string& name) const;
  bool is_latent(const std::string& name) const;
  const std::string& treatment() const { return treatment_; }
  const std::string& outcome() const { return outcome_; }
  std::vector<std::string> nodes() const;
  const std::vector<std::pair<std::string, std::string>>& edges() const {
    return edges_;
  }

  // Text format: one statement per line. `A -> B` declares an edge (and its
  // endpoints), `latent L` marks a node latent, `treatment X` / `outcome Y`
  // designate the pair. `#` starts a comment.
  static Dag parse(const std::string& text);
  static Dag load(const std::string& path);

 private:
  std::vector<std::string> names_;
  std::vector<bool> latent_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::string treatment_, outcome_;

  friend struct DagView;
};

struct BackdoorCheck {
  bool ok = false;
  std::string violation;  // empty when ok
};

// Pearl's back-door criterion for z relative to (treatment, outcome):
// (a) no node of z is a descendant of the treatment, and (b) z d-separates
// treatment from outcome in the graph with the treatment's outgoing edges
// removed. Throws if z contains unknown or latent nodes.
BackdoorCheck check_backdoor_set(const Dag& g, const std::vector<std::string>& z);

bool is_backdoor_set(const Dag& g, const std::vector<std::string>& z);

// True iff x and y are d-separated given z (active-trail reachability).
// Exposed for testing against the path-enumeration oracle.
bool d_separated(const Dag& g, const std::string& x, const std::string& y,
                 const std::vector<std::string>& z);

}  // namespace riskpred::causal

#endif  // RISKPRED_DAG_HPP
