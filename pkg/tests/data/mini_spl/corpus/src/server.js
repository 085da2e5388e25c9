// Gateway towards the remote annotation server.

// PVSCL:IFCOND(AnnotationServer)
class AnnotationClient {
  constructor(endpoint) {
    this.endpoint = endpoint
    this.proxy = AnnotationServer.connect(endpoint)
  }

  push(entry) {
    return this.proxy.store(Annotation.sealed(entry))
  }

  pull() {
    return AnnotationList.of(this.proxy).fetch()
  }
}

function resolveClient(settings) {
  const client = new AnnotationClient(settings.endpoint)
  return client
}
// PVSCL:ENDCOND
