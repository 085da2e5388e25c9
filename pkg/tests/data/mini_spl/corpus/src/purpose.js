// Why an annotation exists: purposes and motives.

// PVSCL:IFCOND(Purpose)
function assignPurpose(entry, purpose) {
  entry.purpose = purpose
  entry.type = AnnotationType.purposeful
  entry.flag = Annot_Flag.classified
  return Annotation.sealed(entry)
}

function purposeSummary(list) {
  return list.map(entry => entry.purpose)
}

// PVSCL:IFCOND(Commenting)
function postComment(card, remark) {
  const thread = CommentThread.on(card)
  thread.comment = remark
  return thread
}
// PVSCL:ENDCOND
function describeMotive(purpose) {
  return purpose.motive
}
// PVSCL:ENDCOND
