"""Extractors: produce embedding files and detection logs from images.

The heavy lifting (metric computation) lives in the separate ``sdqm``
package; this one only runs vision models and writes the file formats
that package consumes.
"""

__version__ = "0.1.0"
