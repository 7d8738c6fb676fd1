// fixture script: enough bytes to look like an asset, no behavior needed
(function () {
  "use strict";
  var loaded = new Date().toISOString();
  if (window.console) console.log("fixture app loaded", loaded);
})();
