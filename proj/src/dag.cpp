#include "riskpred/dag.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace riskpred::causal {

namespace {

struct Graph {
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<int>> children;
};

Graph build_graph(const Dag& g, bool drop_treatment_outgoing) {
  Graph gr;
  const auto names = g.nodes();
  for (std::size_t i = 0; i < names.size(); ++i)
    gr.index[names[i]] = static_cast<int>(i);
  gr.parents.resize(names.size());
  gr.children.resize(names.size());
  const int x = drop_treatment_outgoing ? gr.index.at(g.treatment()) : -1;
  for (const auto& [from, to] : g.edges()) {
    const int a = gr.index.at(from);
    const int b = gr.index.at(to);
    if (a == x) continue;
    gr.children[a].push_back(b);
    gr.parents[b].push_back(a);
  }
  return gr;
}

std::vector<bool> descendants_of(const Graph& gr, int start) {
  std::vector<bool> seen(gr.children.size(), false);
  std::deque<int> queue{start};
  seen[start] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int c : gr.children[v])
      if (!seen[c]) {
        seen[c] = true;
        queue.push_back(c);
      }
  }
  return seen;
}

// Active-trail reachability: a node is visited "up" when the trail arrives
// from a child (or starts there) and "down" when it arrives from a parent.
// Colliders reopen upward only when they are ancestors of the conditioning
// set.
bool reachable_given(const Graph& gr, int from, int to, const std::vector<bool>& in_z) {
  const std::size_t n = gr.children.size();
  std::vector<bool> anc_z(n, false);
  {
    std::deque<int> queue;
    for (std::size_t i = 0; i < n; ++i)
      if (in_z[i]) {
        anc_z[i] = true;
        queue.push_back(static_cast<int>(i));
      }
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int p : gr.parents[v])
        if (!anc_z[p]) {
          anc_z[p] = true;
          queue.push_back(p);
        }
    }
  }

  std::vector<bool> visited_up(n, false), visited_down(n, false);
  std::deque<std::pair<int, bool>> queue;  // (node, arrived_from_child)
  queue.emplace_back(from, true);
  while (!queue.empty()) {
    const auto [v, up] = queue.front();
    queue.pop_front();
    auto& mark = up ? visited_up : visited_down;
    if (mark[v]) continue;
    mark[v] = true;
    // Blocking applies to the interior of a trail, so any arrival at the
    // target counts as connection.
    if (v == to) return true;

    if (up) {
      if (!in_z[v]) {
        for (int p : gr.parents[v]) queue.emplace_back(p, true);
        for (int c : gr.children[v]) queue.emplace_back(c, false);
      }
    } else {
      if (!in_z[v])
        for (int c : gr.children[v]) queue.emplace_back(c, false);
      if (anc_z[v])
        for (int p : gr.parents[v]) queue.emplace_back(p, true);
    }
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void Dag::add_node(const std::string& name, bool latent) {
  if (name.empty()) throw std::invalid_argument("Dag: empty node name");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) {
      if (latent) latent_[i] = true;
      return;
    }
  }
  names_.push_back(name);
  latent_.push_back(latent);
}

void Dag::add_edge(const std::string& from, const std::string& to) {
  if (from == to) throw std::invalid_argument("Dag: self-loop on '" + from + "'");
  add_node(from);
  add_node(to);
  edges_.emplace_back(from, to);
}

void Dag::set_treatment(const std::string& name) {
  add_node(name);
  treatment_ = name;
}

void Dag::set_outcome(const std::string& name) {
  add_node(name);
  outcome_ = name;
}

bool Dag::has_node(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

bool Dag::is_latent(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return latent_[i];
  throw std::invalid_argument("Dag: unknown node '" + name + "'");
}

std::vector<std::string> Dag::nodes() const { return names_; }

void Dag::validate() const {
  if (treatment_.empty() || outcome_.empty())
    throw std::invalid_argument("Dag: treatment and outcome must be designated");
  if (treatment_ == outcome_)
    throw std::invalid_argument("Dag: treatment and outcome must differ");

  // Kahn topological sort to detect cycles.
  std::unordered_map<std::string, int> indeg;
  for (const auto& n : names_) indeg[n] = 0;
  for (const auto& [from, to] : edges_) ++indeg[to];
  std::deque<std::string> ready;
  for (const auto& [n, deg] : indeg)
    if (deg == 0) ready.push_back(n);
  std::size_t removed = 0;
  while (!ready.empty()) {
    const std::string n = ready.front();
    ready.pop_front();
    ++removed;
    for (const auto& [from, to] : edges_)
      if (from == n && --indeg[to] == 0) ready.push_back(to);
  }
  if (removed != names_.size()) throw std::invalid_argument("Dag: graph contains a cycle");
}

Dag Dag::parse(const std::string& text) {
  Dag g;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (const auto arrow = line.find("->"); arrow != std::string::npos) {
      const std::string from = trim(line.substr(0, arrow));
      const std::string to = trim(line.substr(arrow + 2));
      if (from.empty() || to.empty())
        throw std::invalid_argument("Dag: malformed edge at line " +
                                    std::to_string(line_no));
      g.add_edge(from, to);
      continue;
    }
    std::istringstream ls(line);
    std::string keyword, name;
    ls >> keyword >> name;
    if (name.empty() || !(ls >> std::ws).eof())
      throw std::invalid_argument("Dag: malformed statement at line " +
                                  std::to_string(line_no));
    if (keyword == "latent") {
      g.add_node(name, true);
    } else if (keyword == "treatment") {
      g.set_treatment(name);
    } else if (keyword == "outcome") {
      g.set_outcome(name);
    } else {
      throw std::invalid_argument("Dag: unknown keyword '" + keyword + "' at line " +
                                  std::to_string(line_no));
    }
  }
  g.validate();
  return g;
}

Dag Dag::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Dag::load: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool d_separated(const Dag& g, const std::string& x, const std::string& y,
                 const std::vector<std::string>& z) {
  if (!g.has_node(x) || !g.has_node(y))
    throw std::invalid_argument("d_separated: unknown endpoint node");
  Graph gr = build_graph(g, false);
  std::vector<bool> in_z(gr.children.size(), false);
  for (const auto& name : z) {
    const auto it = gr.index.find(name);
    if (it == gr.index.end())
      throw std::invalid_argument("d_separated: unknown node '" + name + "'");
    in_z[it->second] = true;
  }
  return !reachable_given(gr, gr.index.at(x), gr.index.at(y), in_z);
}

BackdoorCheck check_backdoor_set(const Dag& g, const std::vector<std::string>& z) {
  g.validate();
  for (const auto& name : z) {
    if (!g.has_node(name))
      throw std::invalid_argument("check_backdoor_set: unknown node '" + name + "'");
    if (g.is_latent(name))
      throw std::invalid_argument("check_backdoor_set: node '" + name +
                                  "' is latent and cannot be adjusted for");
  }

  // (a) no node of z may descend from the treatment
  {
    Graph gr = build_graph(g, false);
    const auto desc = descendants_of(gr, gr.index.at(g.treatment()));
    for (const auto& name : z)
      if (desc[gr.index.at(name)])
        return {false, "adjustment node '" + name + "' is a descendant of treatment '" +
                           g.treatment() + "'"};
  }

  // (b) z must block every back-door path: d-separation with the treatment's
  // outgoing edges removed
  Graph gr = build_graph(g, true);
  std::vector<bool> in_z(gr.children.size(), false);
  for (const auto& name : z) in_z[gr.index.at(name)] = true;
  if (reachable_given(gr, gr.index.at(g.treatment()), gr.index.at(g.outcome()), in_z))
    return {false, "set {" + [&] {
              std::string joined;
              for (const auto& name : z) {
                if (!joined.empty()) joined += ", ";
                joined += name;
              }
              return joined;
            }() + "} leaves a back-door path from '" + g.treatment() + "' to '" +
                       g.outcome() + "' unblocked"};
  return {true, ""};
}

bool is_backdoor_set(const Dag& g, const std::vector<std::string>& z) {
  return check_backdoor_set(g, z).ok;
}

}  // namespace riskpred::causal
