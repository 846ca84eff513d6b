"""Skorokhod embeddings of centered integer laws in the simple random walk."""
