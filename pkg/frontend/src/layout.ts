/** Deterministic tidy layout for the version tree.
 *
 * Pure function of the node set: children are visited in ascending id order,
 * leaves take consecutive x slots, and every parent sits centered over its
 * children. Depth maps to y. No DOM, no randomness, so two renders of the
 * same tree are pixel-identical and the function is unit-testable headless.
 */

export interface LayoutNode {
  id: number;
  parent: number | null;
}

export interface PlacedNode {
  id: number;
  x: number;
  y: number;
  depth: number;
}

export interface TreeLayout {
  nodes: Map<number, PlacedNode>;
  /** parent-child pairs in drawing order */
  edges: [number, number][];
  width: number;
  height: number;
}

export function layoutTree(nodes: LayoutNode[]): TreeLayout {
  const byId = new Map(nodes.map((n) => [n.id, n]));
  const children = new Map<number, number[]>();
  const roots: number[] = [];
  for (const node of [...nodes].sort((a, b) => a.id - b.id)) {
    if (node.parent === null || !byId.has(node.parent)) {
      roots.push(node.id);
    } else {
      const siblings = children.get(node.parent) ?? [];
      siblings.push(node.id);
      children.set(node.parent, siblings);
    }
  }

  const placed = new Map<number, PlacedNode>();
  const edges: [number, number][] = [];
  let nextLeafX = 0;
  let maxDepth = 0;

  const place = (id: number, depth: number): number => {
    maxDepth = Math.max(maxDepth, depth);
    const kids = children.get(id) ?? [];
    let x: number;
    if (kids.length === 0) {
      x = nextLeafX;
      nextLeafX += 1;
    } else {
      const xs = kids.map((kid) => {
        edges.push([id, kid]);
        return place(kid, depth + 1);
      });
      x = (Math.min(...xs) + Math.max(...xs)) / 2;
    }
    placed.set(id, { id, x, y: depth, depth });
    return x;
  };

  for (const root of roots) {
    place(root, 0);
  }

  // edges were collected parent-first during descent; sort for stable z-order
  edges.sort((a, b) => a[1] - b[1]);
  return {
    nodes: placed,
    edges,
    width: Math.max(1, nextLeafX),
    height: maxDepth + 1,
  };
}
