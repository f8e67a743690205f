# encoding: utf-8
"""
Writing primary outputs. A file is either absent or complete: content
goes to a sibling temporary file first and is renamed over the target.
"""
from twisted.python.filepath import FilePath

from pysert.sert.error import DataError


def write_atomic(path, content):
    """
    :param str path: Target file.
    :param content: ``bytes``, or ``str`` written as UTF-8.
    :raises DataError: The file cannot be written.
    """
    if isinstance(content, str):
        content = content.encode('utf-8')
    target = FilePath(path)
    try:
        parent = target.parent()
        if not parent.exists():
            parent.makedirs()
        target.setContent(content)
    except (IOError, OSError) as e:
        raise DataError(DataError.UNSPECIFIC, 'cannot write %s: %s' % (path, e))
