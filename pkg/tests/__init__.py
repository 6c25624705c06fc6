# Tests for orchard-trees
