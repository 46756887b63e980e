"""Wire protocol, blocking client and the reference augmentation/agent server."""
