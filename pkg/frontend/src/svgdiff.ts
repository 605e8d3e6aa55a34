// Compare two server SVG documents group-by-group. Used by the preview to
// highlight what a partial regeneration actually changed, and by tests to
// assert that a component edit touches exactly one group.

export interface SvgGroups {
  header: string;
  groups: Map<string, string>;
}

/**
 * Split a prototype SVG into its top-level component groups. Relies on the
 * server's stable structure: one `<g id="cmp-N" ...>` per component at the
 * top level, in index order.
 */
export function extractGroups(svg: string): SvgGroups {
  const groups = new Map<string, string>();
  const open = /<g id="(cmp-\d+)"/g;
  let match: RegExpExecArray | null;
  let firstGroup = -1;
  while ((match = open.exec(svg)) !== null) {
    const id = match[1]!;
    if (firstGroup < 0) firstGroup = match.index;
    const end = findGroupEnd(svg, match.index);
    groups.set(id, svg.slice(match.index, end));
  }
  const header = firstGroup >= 0 ? svg.slice(0, firstGroup) : svg;
  return { header, groups };
}

function findGroupEnd(svg: string, start: number): number {
  // walk nested <g>/</g> pairs; icon payloads nest groups inside cmp groups
  let depth = 0;
  const tag = /<g\b|<\/g>/g;
  tag.lastIndex = start;
  let match: RegExpExecArray | null;
  while ((match = tag.exec(svg)) !== null) {
    depth += match[0] === "</g>" ? -1 : 1;
    if (depth === 0) return match.index + match[0].length;
  }
  throw new Error("unbalanced <g> tags in SVG");
}

/** Ids of groups whose markup differs between the two documents. */
export function changedGroups(before: string, after: string): string[] {
  const a = extractGroups(before).groups;
  const b = extractGroups(after).groups;
  const ids = new Set([...a.keys(), ...b.keys()]);
  return [...ids].filter((id) => a.get(id) !== b.get(id)).sort();
}
