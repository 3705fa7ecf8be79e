#pragma once

#include <array>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polyhappy/molgraph.hpp"

namespace polyhappy {

class FragmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Attachment point left on a fragment by a cut bond or a polymerizable end.
struct Port {
  int atom = 0;  // atom index within the fragment graph
  int id = 0;    // 1-based, unique within the fragment, canonical order
};

struct Fragment {
  MolGraph graph;
  std::vector<Port> ports;  // ascending id
  // Canonical SMILES with each port written as a numbered wildcard "[id*]".
  std::string key;

  const Port& port(int id) const { return ports.at(static_cast<std::size_t>(id - 1)); }
  int port_count() const { return static_cast<int>(ports.size()); }
};

// One attachment point in a tree: node index plus that node's port id.
struct PortRef {
  int node = 0;
  int port = 0;
  auto operator<=>(const PortRef&) const = default;
};

struct TreeLink {
  PortRef a;
  PortRef b;
};

struct FragmentTree {
  MolGraph source;
  std::vector<Fragment> fragments;
  std::vector<TreeLink> edges;
  std::array<PortRef, 2> ends;
  // fragment_atoms[f][i] = source index of atom i of fragment f.
  std::vector<std::vector<int>> fragment_atoms;
  // Source bond cut for edges[e].
  std::vector<int> edge_bonds;
};

// Off-mainline subtree rooted at `node`, joined to its host through
// host_port (on the host) and attach_port (on node).
struct Sideline {
  int host_port = 0;
  int node = 0;
  int attach_port = 0;
  std::vector<Sideline> children;  // ascending host_port
};

struct MainlineDecomposition {
  std::vector<int> mainline;
  // Per mainline node: port toward the previous unit (or the first end)
  // and port toward the next unit (or the second end).
  std::vector<std::array<int, 2>> mainline_ports;
  std::map<int, std::vector<Sideline>> sidelines;  // host -> ascending host_port
};

// Builds a port-annotated fragment from `atoms` of `source`. Each port
// site is a source atom that receives one attachment point; the returned
// vector gives the port id assigned to each site, in input order.
struct BuiltFragment {
  Fragment fragment;
  std::vector<int> site_ports;
};
BuiltFragment build_fragment(const MolGraph& source, std::span<const int> atoms,
                             std::span<const int> port_sites);

// Rebuilds a fragment from its canonical key.
Fragment fragment_from_key(const std::string& key);

std::string canonical_fragment_key(const Fragment& f);

FragmentTree fragment_acyclic(const MolGraph& g);

MainlineDecomposition locate_mainline(int node_count, std::span<const TreeLink> links,
                                      const std::array<PortRef, 2>& ends);
MainlineDecomposition locate_mainline(const FragmentTree& t);

// Reconnects all tree edges and restores the wildcard ends.
MolGraph reassemble(const FragmentTree& t);

// Acyclic single bonds between heavy atoms; the bonds fragment_acyclic cuts.
std::vector<int> cuttable_bonds(const MolGraph& g);

}  // namespace polyhappy
