#include "polyhappy/fragment.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace polyhappy {

namespace {

bool heavy(const Atom& a) { return !a.is_wildcard() && a.element != Element::kH; }

}  // namespace

std::vector<int> cuttable_bonds(const MolGraph& g) {
  std::vector<bool> cyclic = ring_bonds(g);
  std::vector<int> out;
  for (int b = 0; b < g.bond_count(); ++b) {
    const Bond& bond = g.bond(b);
    if (bond.order != BondOrder::kSingle || cyclic[static_cast<std::size_t>(b)]) continue;
    if (!heavy(g.atom(bond.begin)) || !heavy(g.atom(bond.end))) continue;
    out.push_back(b);
  }
  return out;
}

BuiltFragment build_fragment(const MolGraph& source, std::span<const int> atoms,
                             std::span<const int> port_sites) {
  std::vector<int> local(static_cast<std::size_t>(source.atom_count()), -1);
  MolGraph g;
  for (int a : atoms) local[static_cast<std::size_t>(a)] = g.add_atom(source.atom(a));
  for (const Bond& b : source.bonds()) {
    int x = local[static_cast<std::size_t>(b.begin)];
    int y = local[static_cast<std::size_t>(b.end)];
    if (x >= 0 && y >= 0) g.add_bond(x, y, b.order);
  }

  // Unlabeled wildcards first: their canonical ranks fix the port numbering.
  MolGraph capped = g;
  std::vector<int> wildcard(port_sites.size());
  for (std::size_t i = 0; i < port_sites.size(); ++i) {
    int host = local[static_cast<std::size_t>(port_sites[i])];
    if (host < 0) throw FragmentError("port site outside fragment");
    Atom w;
    w.element = Element::kWildcard;
    wildcard[i] = capped.add_atom(w);
    capped.add_bond(host, wildcard[i], BondOrder::kSingle);
  }
  std::vector<int> rank = canonical_rank(capped);
  std::vector<std::size_t> order(port_sites.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return rank[static_cast<std::size_t>(wildcard[x])] < rank[static_cast<std::size_t>(wildcard[y])];
  });

  BuiltFragment out;
  out.site_ports.assign(port_sites.size(), 0);
  out.fragment.ports.resize(port_sites.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t site = order[k];
    int id = static_cast<int>(k) + 1;
    out.site_ports[site] = id;
    out.fragment.ports[k] = Port{local[static_cast<std::size_t>(port_sites[site])], id};
    capped.mutable_atom(wildcard[site]).port_label = id;
  }
  out.fragment.key = write_smiles(capped);
  out.fragment.graph = std::move(g);
  return out;
}

std::string canonical_fragment_key(const Fragment& f) {
  MolGraph capped = f.graph;
  for (const Port& p : f.ports) {
    Atom w;
    w.element = Element::kWildcard;
    w.port_label = p.id;
    int idx = capped.add_atom(w);
    capped.add_bond(p.atom, idx, BondOrder::kSingle);
  }
  return write_smiles(capped);
}

Fragment fragment_from_key(const std::string& key) {
  MolGraph parsed = parse_smiles(key);
  Fragment f;
  std::vector<int> local(static_cast<std::size_t>(parsed.atom_count()), -1);
  for (int i = 0; i < parsed.atom_count(); ++i) {
    if (!parsed.atom(i).is_wildcard()) local[static_cast<std::size_t>(i)] = f.graph.add_atom(parsed.atom(i));
  }
  for (const Bond& b : parsed.bonds()) {
    int x = local[static_cast<std::size_t>(b.begin)];
    int y = local[static_cast<std::size_t>(b.end)];
    if (x >= 0 && y >= 0) f.graph.add_bond(x, y, b.order);
  }
  for (int i = 0; i < parsed.atom_count(); ++i) {
    const Atom& a = parsed.atom(i);
    if (!a.is_wildcard()) continue;
    if (a.port_label <= 0 || parsed.degree(i) != 1) {
      throw FragmentError("malformed fragment key: " + key);
    }
    int host = parsed.neighbors(i)[0].atom;
    f.ports.push_back(Port{local[static_cast<std::size_t>(host)], a.port_label});
  }
  std::sort(f.ports.begin(), f.ports.end(), [](const Port& a, const Port& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < f.ports.size(); ++i) {
    if (f.ports[i].id != static_cast<int>(i) + 1) throw FragmentError("malformed fragment key: " + key);
  }
  f.key = key;
  return f;
}

FragmentTree fragment_acyclic(const MolGraph& g) {
  if (g.wildcard_count() != 2) {
    throw FragmentError("repeat unit needs exactly two wildcard ends, found " +
                        std::to_string(g.wildcard_count()));
  }
  if (!g.connected()) throw FragmentError("repeat unit is disconnected");

  std::vector<int> end_atoms;
  for (int i = 0; i < g.atom_count(); ++i) {
    if (!g.atom(i).is_wildcard()) continue;
    if (g.degree(i) != 1) throw FragmentError("wildcard end must have exactly one bond");
    const Neighbor& nb = g.neighbors(i)[0];
    if (g.bond(nb.bond).order != BondOrder::kSingle) {
      throw FragmentError("wildcard end must be singly bonded");
    }
    if (g.atom(nb.atom).is_wildcard()) throw FragmentError("wildcard ends bonded to each other");
    end_atoms.push_back(nb.atom);
  }

  std::vector<int> cuts = cuttable_bonds(g);
  std::vector<bool> is_cut(static_cast<std::size_t>(g.bond_count()), false);
  for (int b : cuts) is_cut[static_cast<std::size_t>(b)] = true;

  // Components over uncut bonds, wildcards excluded.
  const auto n = static_cast<std::size_t>(g.atom_count());
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> members;
  for (int s = 0; s < g.atom_count(); ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0 || g.atom(s).is_wildcard()) continue;
    int c = static_cast<int>(members.size());
    members.emplace_back();
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = c;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      members[static_cast<std::size_t>(c)].push_back(u);
      for (const Neighbor& nb : g.neighbors(u)) {
        if (is_cut[static_cast<std::size_t>(nb.bond)] || g.atom(nb.atom).is_wildcard()) continue;
        if (comp[static_cast<std::size_t>(nb.atom)] < 0) {
          comp[static_cast<std::size_t>(nb.atom)] = c;
          stack.push_back(nb.atom);
        }
      }
    }
  }

  // Order fragments by their lowest canonical atom rank.
  std::vector<int> rank = canonical_rank(g);
  std::vector<int> min_rank(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::sort(members[c].begin(), members[c].end());
    int best = g.atom_count();
    for (int a : members[c]) best = std::min(best, rank[static_cast<std::size_t>(a)]);
    min_rank[c] = best;
  }
  std::vector<int> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return min_rank[static_cast<std::size_t>(x)] < min_rank[static_cast<std::size_t>(y)];
  });
  std::vector<int> position(members.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[static_cast<std::size_t>(order[i])] = static_cast<int>(i);

  // Port sites per fragment: ends first, then cut bonds in bond order.
  struct Site {
    int atom;
    int tag;  // -1 / -2 for ends, otherwise the cut bond
  };
  std::vector<std::vector<Site>> sites(members.size());
  for (std::size_t e = 0; e < end_atoms.size(); ++e) {
    int c = position[static_cast<std::size_t>(comp[static_cast<std::size_t>(end_atoms[e])])];
    sites[static_cast<std::size_t>(c)].push_back({end_atoms[e], -1 - static_cast<int>(e)});
  }
  for (int b : cuts) {
    const Bond& bond = g.bond(b);
    for (int a : {bond.begin, bond.end}) {
      int c = position[static_cast<std::size_t>(comp[static_cast<std::size_t>(a)])];
      sites[static_cast<std::size_t>(c)].push_back({a, b});
    }
  }

  FragmentTree t;
  t.source = g;
  std::map<std::pair<int, int>, PortRef> port_of;  // (tag, atom) -> port
  for (std::size_t f = 0; f < order.size(); ++f) {
    const std::vector<int>& atoms = members[static_cast<std::size_t>(order[f])];
    std::vector<int> site_atoms;
    for (const Site& s : sites[f]) site_atoms.push_back(s.atom);
    BuiltFragment built = build_fragment(g, atoms, site_atoms);
    for (std::size_t k = 0; k < sites[f].size(); ++k) {
      port_of[{sites[f][k].tag, sites[f][k].atom}] = PortRef{static_cast<int>(f), built.site_ports[k]};
    }
    t.fragments.push_back(std::move(built.fragment));
    t.fragment_atoms.push_back(atoms);
  }
  for (std::size_t e = 0; e < 2; ++e) {
    t.ends[e] = port_of.at({-1 - static_cast<int>(e), end_atoms[e]});
  }
  for (int b : cuts) {
    const Bond& bond = g.bond(b);
    PortRef x = port_of.at({b, bond.begin});
    PortRef y = port_of.at({b, bond.end});
    if (y < x) std::swap(x, y);
    t.edges.push_back(TreeLink{x, y});
    t.edge_bonds.push_back(b);
  }
  return t;
}

MainlineDecomposition locate_mainline(int node_count, std::span<const TreeLink> links,
                                      const std::array<PortRef, 2>& ends) {
  // adjacency: node -> (own port, other node, other port)
  struct Arc {
    int port;
    int node;
    int other_port;
  };
  std::vector<std::vector<Arc>> adj(static_cast<std::size_t>(node_count));
  for (const TreeLink& l : links) {
    adj[static_cast<std::size_t>(l.a.node)].push_back({l.a.port, l.b.node, l.b.port});
    adj[static_cast<std::size_t>(l.b.node)].push_back({l.b.port, l.a.node, l.a.port});
  }
  for (auto& arcs : adj) {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.port < y.port; });
  }

  // Path from ends[0].node to ends[1].node.
  std::vector<int> parent(static_cast<std::size_t>(node_count), -2);
  std::vector<int> parent_port(static_cast<std::size_t>(node_count), 0);  // port on child toward parent
  std::vector<int> queue{ends[0].node};
  parent[static_cast<std::size_t>(ends[0].node)] = -1;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    int u = queue[h];
    for (const Arc& a : adj[static_cast<std::size_t>(u)]) {
      if (parent[static_cast<std::size_t>(a.node)] != -2) continue;
      parent[static_cast<std::size_t>(a.node)] = u;
      parent_port[static_cast<std::size_t>(a.node)] = a.other_port;
      queue.push_back(a.node);
    }
  }
  if (parent[static_cast<std::size_t>(ends[1].node)] == -2) {
    throw FragmentError("fragment tree is disconnected");
  }

  MainlineDecomposition d;
  for (int v = ends[1].node; v != -1; v = parent[static_cast<std::size_t>(v)]) d.mainline.push_back(v);
  std::reverse(d.mainline.begin(), d.mainline.end());
  std::vector<bool> on_main(static_cast<std::size_t>(node_count), false);
  for (int v : d.mainline) on_main[static_cast<std::size_t>(v)] = true;

  const std::size_t len = d.mainline.size();
  d.mainline_ports.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    int v = d.mainline[i];
    int in = i == 0 ? ends[0].port : parent_port[static_cast<std::size_t>(v)];
    int out = ends[1].port;
    if (i + 1 < len) {
      int next = d.mainline[i + 1];
      for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
        if (a.node == next) out = a.port;
      }
    }
    d.mainline_ports[i] = {in, out};
  }

  // Sideline subtrees hang off every mainline arc leading off the path.
  std::function<Sideline(int, int, int, int)> grow = [&](int node, int attach, int host_port,
                                                        int from) -> Sideline {
    Sideline s{host_port, node, attach, {}};
    for (const Arc& a : adj[static_cast<std::size_t>(node)]) {
      if (a.node == from) continue;
      s.children.push_back(grow(a.node, a.other_port, a.port, node));
    }
    return s;
  };
  for (std::size_t i = 0; i < len; ++i) {
    int v = d.mainline[i];
    std::vector<Sideline> hanging;
    for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
      if (on_main[static_cast<std::size_t>(a.node)]) continue;
      hanging.push_back(grow(a.node, a.other_port, a.port, v));
    }
    if (!hanging.empty()) d.sidelines[v] = std::move(hanging);
  }
  return d;
}

MainlineDecomposition locate_mainline(const FragmentTree& t) {
  return locate_mainline(static_cast<int>(t.fragments.size()), t.edges, t.ends);
}

MolGraph reassemble(const FragmentTree& t) {
  MolGraph g;
  std::vector<int> offset;
  for (const Fragment& f : t.fragments) {
    offset.push_back(g.atom_count());
    for (const Atom& a : f.graph.atoms()) g.add_atom(a);
    for (const Bond& b : f.graph.bonds()) {
      g.add_bond(offset.back() + b.begin, offset.back() + b.end, b.order);
    }
  }
  auto atom_of = [&](const PortRef& p) {
    return offset[static_cast<std::size_t>(p.node)] +
           t.fragments[static_cast<std::size_t>(p.node)].port(p.port).atom;
  };
  for (const TreeLink& l : t.edges) g.add_bond(atom_of(l.a), atom_of(l.b), BondOrder::kSingle);
  for (const PortRef& e : t.ends) {
    Atom w;
    w.element = Element::kWildcard;
    int idx = g.add_atom(w);
    g.add_bond(atom_of(e), idx, BondOrder::kSingle);
  }
  return g;
}

}  // namespace polyhappy
