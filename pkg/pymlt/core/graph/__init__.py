"""
Directed binary multiplex networks.

A ``MultiplexGraph`` holds ``L`` directed edge layers over one set of ``N``
nodes. Node identity is a string label in files and a dense integer index in
memory. Graphs are immutable after construction.

File format
-----------
Edge lists have the columns ``src dst layer``; layers are numbered from 1::

    # src   dst   layer
    a       b     1
    b       a     1
    a       c     2

A line holding a TAB is split on TABs only, so labels may contain spaces or
start with ``#``. Lines without a TAB are split on any whitespace, and among
those a leading ``#`` marks a comment. The header line written by
``save_edge_list`` is the one TAB separated comment. Labels must be non-empty,
unique and free of TABs and line breaks.

A JSON sidecar ``<edge list>.json`` stores ``n_nodes``, ``n_layers`` and the
label order, so that saving and loading again gives the identical graph, and
so that nodes without edges survive the round trip.

----
"""
import collections
import os

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

import pymlt.core.logging as logging
from pymlt.core.errors import DomainError, LayerRangeError, ParseError, ShapeError
from pymlt.core.helpers import read_json, write_json


logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".json"
HEADER = "# src\tdst\tlayer"


class MultiplexGraph(object):
    """
    A directed, binary multiplex network.

    Parameters
    ----------
    n_nodes : int
        Number of nodes ``N``.
    n_layers : int
        Number of layers ``L``.
    edges : sequence of iterables of (int, int)
        One iterable of ordered node pairs per layer. Duplicates collapse.
    node_labels : sequence of str, optional
        External identifiers, ``str(i)`` if not given.

    Raises
    ------
    DomainError
        For self-loops or endpoints outside of ``[0, N)``.
    ShapeError
        If the number of edge layers or labels does not fit.
    """

    def __init__(self, n_nodes, n_layers, edges, node_labels=None):
        n_nodes, n_layers = int(n_nodes), int(n_layers)
        if n_nodes < 0 or n_layers < 1:
            raise ShapeError("Need n_nodes >= 0 and n_layers >= 1, got %s and %s" % (n_nodes, n_layers))
        edges = list(edges)
        if len(edges) != n_layers:
            raise ShapeError("Got %s edge layers for n_layers=%s" % (len(edges), n_layers))
        layers = []
        for layer, layer_edges in enumerate(edges):
            layer_set = frozenset((int(i), int(j)) for i, j in layer_edges)
            for i, j in layer_set:
                if i == j:
                    raise DomainError("Self-loop (%s, %s) in layer %s" % (i, j, layer))
                if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                    raise DomainError("Edge (%s, %s) in layer %s is outside of [0, %s)" % (i, j, layer, n_nodes))
            layers.append(layer_set)
        if node_labels is None:
            node_labels = [str(i) for i in range(n_nodes)]
        node_labels = tuple(str(label) for label in node_labels)
        if len(node_labels) != n_nodes:
            raise ShapeError("Got %s labels for %s nodes" % (len(node_labels), n_nodes))
        for label in node_labels:
            if not label or any(char in label for char in "\t\r\n"):
                raise DomainError("Node label %r is empty or holds a TAB or line break" % (label,))
        if len(set(node_labels)) != n_nodes:
            raise DomainError("Node labels are not unique")
        self._n_nodes = n_nodes
        self._n_layers = n_layers
        self._edges = tuple(layers)
        self._node_labels = node_labels
        self._adjacency = None

    @classmethod
    def from_adjacency(cls, adjacency, node_labels=None):
        """ Builds a graph from a (L, N, N) array of zeros and ones; the diagonal is ignored """
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 3 or adjacency.shape[1] != adjacency.shape[2]:
            raise ShapeError("Expected an (L, N, N) adjacency tensor, got shape %s" % (adjacency.shape,))
        n_layers, n_nodes = adjacency.shape[0], adjacency.shape[1]
        edges = []
        for layer in range(n_layers):
            rows, cols = np.nonzero(adjacency[layer])
            edges.append([(i, j) for i, j in zip(rows.tolist(), cols.tolist()) if i != j])
        return cls(n_nodes, n_layers, edges, node_labels)

    @property
    def n_nodes(self):
        return self._n_nodes

    @property
    def n_layers(self):
        return self._n_layers

    @property
    def edges(self):
        """ Tuple with one frozenset of (i, j) pairs per layer """
        return self._edges

    @property
    def node_labels(self):
        return self._node_labels

    def adjacency(self):
        """
        The (L, N, N) adjacency tensor as a read-only ``uint8`` array.

        ``adjacency()[l, i, j] == 1`` if and only if ``(i, j)`` is an edge of
        layer ``l``.
        """
        if self._adjacency is None:
            tensor = np.zeros((self.n_layers, self.n_nodes, self.n_nodes), dtype=np.uint8)
            for layer, layer_edges in enumerate(self.edges):
                if layer_edges:
                    pairs = np.array(sorted(layer_edges), dtype=np.intp)
                    tensor[layer, pairs[:, 0], pairs[:, 1]] = 1
            tensor.setflags(write=False)
            self._adjacency = tensor
        return self._adjacency

    def layer_adjacency(self, layer):
        return self.adjacency()[self._check_layer(layer)]

    def n_edges(self, layer=None):
        if layer is None:
            return sum(len(layer_edges) for layer_edges in self.edges)
        return len(self.edges[self._check_layer(layer)])

    def sorted_edges(self, layer):
        """ Edges of one layer as an (E, 2) integer array in lexicographic order """
        layer_edges = sorted(self.edges[self._check_layer(layer)])
        return np.array(layer_edges, dtype=np.intp).reshape(len(layer_edges), 2)

    def collapsed(self):
        """ Sparse N x N matrix of the union of all layers """
        union = self.adjacency().max(axis=0) if self.n_layers else np.zeros((self.n_nodes, self.n_nodes))
        return sparse.csr_matrix(union)

    def subgraph(self, nodes):
        """
        Induced subgraph on ``nodes``, re-indexed in the given order.

        Parameters
        ----------
        nodes : sequence of int
            The kept node indices; new index ``k`` is old node ``nodes[k]``.
        """
        nodes = [int(node) for node in nodes]
        new_index = {old: new for new, old in enumerate(nodes)}
        edges = [[(new_index[i], new_index[j]) for i, j in layer_edges
                  if i in new_index and j in new_index]
                 for layer_edges in self.edges]
        labels = [self.node_labels[node] for node in nodes]
        return type(self)(len(nodes), self.n_layers, edges, labels)

    def layer_digraph(self, layer):
        """ One layer as a ``networkx.DiGraph`` on nodes 0..N-1 """
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(self.n_nodes))
        digraph.add_edges_from(sorted(self.edges[self._check_layer(layer)]))
        return digraph

    def _check_layer(self, layer):
        layer = int(layer)
        if not 0 <= layer < self.n_layers:
            raise DomainError("Layer %s is outside of [0, %s)" % (layer, self.n_layers))
        return layer

    def __eq__(self, other):
        return bool(isinstance(other, MultiplexGraph) and
                    self.n_nodes == other.n_nodes and
                    self.n_layers == other.n_layers and
                    self.edges == other.edges and
                    self.node_labels == other.node_labels)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.n_nodes, self.n_layers, self.edges, self.node_labels))

    def __repr__(self):
        return "MultiplexGraph(n_nodes=%s, n_layers=%s, n_edges=%s)" % \
                (self.n_nodes, self.n_layers, [len(layer_edges) for layer_edges in self.edges])


LayerStats = collections.namedtuple(
    "LayerStats", ["reciprocity", "transitivity", "clustering", "avg_degree", "n_edges"])
LayerStats.__doc__ = """Structural statistics of one layer; every fraction lies in [0, 1]"""


class DegreeProfile(object):
    """
    Per-layer degrees of every node and their normalized profile.

    Attributes
    ----------
    direction : str
        ``"in"`` or ``"out"``
    raw : numpy.ndarray
        (N, L) integer degrees.
    normalized : numpy.ndarray
        (N, L) rows of ``raw`` divided by their sum; all-zero for inactive
        nodes.
    active : numpy.ndarray
        (N,) bool, False for nodes without any edge in this direction. Those
        rows are flagged and left out of NMI computations.
    """

    def __init__(self, direction, raw):
        self.direction = direction
        self.raw = raw
        totals = raw.sum(axis=1)
        self.active = totals > 0
        self.normalized = np.zeros(raw.shape, dtype=float)
        self.normalized[self.active] = raw[self.active] / totals[self.active, None].astype(float)

    def __repr__(self):
        return "DegreeProfile(direction=%r, n_nodes=%s, n_active=%s)" % \
                (self.direction, self.raw.shape[0], int(self.active.sum()))


################################################################################
#
#           F I L E   I / O
#
################################################################################
def sidecar_path(path):
    return path + SIDECAR_SUFFIX


def split_row(line):
    """ The columns of one edge list line, ``None`` for blank and comment lines """
    line = line.rstrip("\r\n")
    if "\t" in line:
        if line == HEADER:
            return None
        return line.split("\t")
    if not line.strip() or line.lstrip().startswith("#"):
        return None
    return line.split()


def load_edge_list(path, n_layers=None):
    """
    Reads a multiplex edge list.

    Parameters
    ----------
    path : str
        The edge list file.
    n_layers : int, optional
        Number of layers. If not given, it is taken from the sidecar, or
        else from the largest layer index in the file.

    Returns
    -------
    MultiplexGraph
        Duplicate rows collapse. Self-loop rows are dropped and counted in a
        warning. Node indices follow the sidecar label order if there is
        one, otherwise the order of first appearance.

    Raises
    ------
    ParseError
        For lines without exactly three columns or a non-integer layer.
    LayerRangeError
        For layer indices outside of ``[1, n_layers]``.
    """
    sidecar = None
    if os.path.isfile(sidecar_path(path)):
        sidecar = read_json(sidecar_path(path))
        logger.debug("Using sidecar %s", sidecar_path(path))
        if n_layers is None:
            n_layers = int(sidecar["n_layers"])

    rows = []
    with open(path, "r") as edge_file:
        for line_number, line in enumerate(edge_file, start=1):
            columns = split_row(line)
            if columns is None:
                continue
            if len(columns) != 3:
                raise ParseError("expected 3 columns (src dst layer), found %s" % len(columns),
                                 path, line_number)
            src, dst, layer = columns
            try:
                layer = int(layer)
            except ValueError:
                raise ParseError("layer %r is not an integer" % layer, path, line_number)
            rows.append((line_number, src, dst, layer))

    if n_layers is None:
        n_layers = max([row[3] for row in rows] + [1])
    n_layers = int(n_layers)

    labels = list(sidecar["node_labels"]) if sidecar else []
    index = {label: i for i, label in enumerate(labels)}
    edges = [set() for _ in range(n_layers)]
    n_self_loops = 0
    for line_number, src, dst, layer in rows:
        if not 1 <= layer <= n_layers:
            raise LayerRangeError("layer %s is outside of [1, %s]" % (layer, n_layers),
                                  path, line_number)
        for label in (src, dst):
            if sidecar and label not in index:
                raise ParseError("node %r is missing from the sidecar" % label, path, line_number)
        if src == dst:
            n_self_loops += 1
            continue
        for label in (src, dst):
            if label not in index:
                index[label] = len(labels)
                labels.append(label)
        edges[layer - 1].add((index[src], index[dst]))

    if n_self_loops:
        logger.warning("Dropped %s self-loop rows from %s", n_self_loops, path)
    graph = MultiplexGraph(len(labels), n_layers, edges, labels)
    logger.info("Loaded %r from %s", graph, path)
    return graph


def save_edge_list(graph, path):
    """
    Writes ``graph`` as a TAB separated edge list plus its JSON sidecar.

    Rows are sorted by layer, then source and target index, so the output is
    byte-identical for equal graphs.

    Returns
    -------
    list of str
        The two files written.
    """
    with open(path, "w") as edge_file:
        edge_file.write(HEADER + "\n")
        for layer in range(graph.n_layers):
            for i, j in graph.sorted_edges(layer).tolist():
                edge_file.write("%s\t%s\t%s\n" % (graph.node_labels[i], graph.node_labels[j], layer + 1))
    write_json(sidecar_path(path), graph_metadata(graph))
    return [path, sidecar_path(path)]


def graph_metadata(graph):
    return {"n_nodes": graph.n_nodes,
            "n_layers": graph.n_layers,
            "node_labels": list(graph.node_labels)}


################################################################################
#
#           P R E P R O C E S S I N G   A N D   S T A T I S T I C S
#
################################################################################
def restrict_to_scc(graph):
    """
    Induced subgraph on the largest strongly connected component of the
    collapsed (all layers merged) directed graph.

    Among equally large components the one holding the smallest node index is
    kept. Kept nodes stay in their original relative order.
    """
    if graph.n_nodes == 0:
        raise DomainError("Cannot restrict an empty graph")
    _, component = csgraph.connected_components(graph.collapsed(), directed=True, connection="strong")
    sizes = np.bincount(component)
    largest = sizes.max()
    # first node of a largest component decides the tie
    keep_label = component[np.flatnonzero(sizes[component] == largest)[0]]
    nodes = np.flatnonzero(component == keep_label)
    if len(nodes) < graph.n_nodes:
        logger.info("Strongly connected component keeps %s of %s nodes", len(nodes), graph.n_nodes)
    return graph.subgraph(nodes)


def layer_stats(graph, layer):
    """
    Reciprocity, transitivity, mean local clustering and average degree of
    one layer.

    Reciprocity counts directed edges whose reverse also exists, divided by
    the number of directed edges. Transitivity and clustering use the
    undirected projection (an undirected edge wherever either direction
    exists). The average degree is directed edges per node. Empty layers give
    zeros throughout.
    """
    adjacency = graph.layer_adjacency(layer)
    n_edges = int(adjacency.sum())
    if n_edges == 0 or graph.n_nodes == 0:
        return LayerStats(0.0, 0.0, 0.0, 0.0, n_edges)
    reciprocity = float((adjacency & adjacency.T).sum()) / n_edges
    undirected = graph.layer_digraph(layer).to_undirected()
    return LayerStats(reciprocity=reciprocity,
                      transitivity=float(nx.transitivity(undirected)),
                      clustering=float(nx.average_clustering(undirected)),
                      avg_degree=float(n_edges) / graph.n_nodes,
                      n_edges=n_edges)


def degree_profile(graph, direction):
    """
    Per-layer in- or out-degrees and their row-normalized profile.

    Parameters
    ----------
    graph : MultiplexGraph
    direction : str
        ``"in"`` or ``"out"``

    Returns
    -------
    DegreeProfile
    """
    if direction not in ("in", "out"):
        raise DomainError("direction must be 'in' or 'out', got %r" % (direction,))
    axis = 2 if direction == "out" else 1
    raw = graph.adjacency().sum(axis=axis).T.astype(np.int64)
    return DegreeProfile(direction, raw)
