// Locating the region an annotation points at.

// PVSCL:IFCOND(Target)
function locateTarget(selector) {
  const target = TargetAnchor.from(selector)
  target.anchor = selector.anchor()
  return target
}

function highlightTarget(target) {
  const anchor = target.anchor
  anchor.scrollIntoView()
  return target.highlight()
}
// PVSCL:ENDCOND
