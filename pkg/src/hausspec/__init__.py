"""Hall-basis Lie algebra, collection, lattice and spectrum computations."""
