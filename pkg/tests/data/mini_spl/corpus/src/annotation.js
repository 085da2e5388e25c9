// Core annotation model shared by every client variant.
const DEFAULT_COLOR = '#ffd54f'

// PVSCL:IFCOND(AnnotationServer)
function createAnnotation(resource) {
  const entry = new Annotation(resource)
  entry.type = AnnotationType.plain
  entry.flag = Annot_Flag.fresh
  return entry
}

function storeAnnotation(entry, backend) {
  const list = AnnotationList.of(backend)
  list.push(Annotation.sealed(entry))
  return list
}

function fetchAnnotations(backend) {
  return AnnotationList.of(backend).fetch()
}
// PVSCL:ENDCOND
