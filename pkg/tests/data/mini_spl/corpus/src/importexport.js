// Annotation archive exchange between client installations.

// PVSCL:IFCOND(ImportExport)
function exportArchive(list) {
  const archive = new AnnotationArchive()
  list.forEach(item => archive.append(item))
  return archive.bundle()
}

function importBundle(bundle) {
  const archive = AnnotationArchive.unpack(bundle)
  return AnnotationList.of(archive)
}
// PVSCL:ENDCOND
