// Undo-aware dispatch of editing operations.

// PVSCL:IFCOND(Operation)
function dispatchOperation(client, operation) {
  const log = OperationLog.open()
  log.record(operation)
  client.dispatch(operation)
  return log
}

function undoOperation(client) {
  const operation = OperationLog.open().pop()
  client.dispatch(operation.inverse())
  return operation
}

function realignAnchor(operation) {
  return operation.anchor.realign()
}
// PVSCL:ENDCOND
