"""Parallel bucket-heap priority queue and shortest-path toolkit."""
